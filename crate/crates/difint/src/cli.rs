//! Command-line front end: derivative estimates, kernel/weight validation,
//! h-sweeps, Fabius evaluation and the kernel registry listing.
//!
//! Exit codes: 0 success, 1 failed validation verdict or non-convergence,
//! 2 usage errors.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::differentiator::{self, DifferentiatorError};
use crate::fabius::{self, FabiusError, FabiusTable};
use crate::functions;
use crate::kernels::{self, KernelSpec, RegistryEntry};
use crate::validator;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "difint",
    version,
    about = "Numerical differentiation by integration against kernels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Table,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputOptions {
    /// Output format.
    #[arg(long, value_enum, default_value = "table")]
    pub format: OutputFormat,
    /// Write output to a file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the n-th derivative of a corpus function at a point.
    Diff {
        /// Kernel id (see `difint kernels`).
        #[arg(long)]
        kernel: String,
        /// Derivative order; defaults to the kernel's own order.
        #[arg(long)]
        n: Option<u32>,
        /// Function id: sin, cos, exp, abs, xabs, tanh, or poly:c0,c1,...
        #[arg(long)]
        f: String,
        /// Differentiation point.
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        /// Step half-width.
        #[arg(long)]
        h: f64,
        /// Absolute quadrature tolerance.
        #[arg(long, default_value_t = differentiator::DEFAULT_QUAD_TOL)]
        quad_tol: f64,
        #[command(flatten)]
        output: OutputOptions,
    },
    /// Validate a kernel (or a weight) against the order-n conditions.
    Validate {
        /// Kernel id to validate.
        #[arg(long, conflicts_with = "weight")]
        kernel: Option<String>,
        /// Weight id to validate: lanczos, constant, bump, fabius.
        #[arg(long)]
        weight: Option<String>,
        /// Order for weight validation (and for the constant pseudo-kernel).
        #[arg(long, default_value_t = 1)]
        n: u32,
        /// Residual tolerance for the verdict.
        #[arg(long, default_value_t = validator::DEFAULT_VALIDATION_TOL)]
        tol: f64,
        /// Antiderivative grid size.
        #[arg(long, default_value_t = validator::DEFAULT_VALIDATION_GRID)]
        grid_size: usize,
        #[command(flatten)]
        output: OutputOptions,
    },
    /// Estimate across a decreasing list of h values and tabulate errors.
    Sweep {
        #[arg(long)]
        kernel: String,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        f: String,
        #[arg(long, allow_negative_numbers = true)]
        x0: f64,
        /// Comma-separated strictly decreasing h values, e.g. 0.5,0.25,0.125
        #[arg(long)]
        h: String,
        /// Known derivative value; enables the abs_error column.
        #[arg(long, allow_negative_numbers = true)]
        reference: Option<f64>,
        #[arg(long, default_value_t = differentiator::DEFAULT_QUAD_TOL)]
        quad_tol: f64,
        #[command(flatten)]
        output: OutputOptions,
    },
    /// Evaluate the Fabius function (or one of its derivatives).
    Fabius {
        /// Evaluation point, 0 <= x <= max supported argument.
        #[arg(long, allow_negative_numbers = true)]
        x: Option<f64>,
        /// Derivative order m (0 = the function itself).
        #[arg(long, default_value_t = 0)]
        m: u32,
        /// Export the base table as CSV to this path.
        #[arg(long)]
        export: Option<PathBuf>,
        /// Load the base table from a previously exported CSV.
        #[arg(long)]
        import: Option<PathBuf>,
        /// Grid size when building a fresh table.
        #[arg(long, default_value_t = fabius::DEFAULT_TABLE_GRID)]
        grid_size: usize,
        /// Fixed-point tolerance when building a fresh table.
        #[arg(long, default_value_t = fabius::DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = fabius::DEFAULT_MAX_ITERATIONS)]
        max_iterations: u32,
    },
    /// List the kernel registry.
    Kernels,
}

/// Failure with the exit code the process should report.
#[derive(Debug)]
pub struct CliFailure {
    pub code: i32,
    pub message: String,
}

impl CliFailure {
    fn usage(message: impl Into<String>) -> Self {
        CliFailure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn failure(message: impl Into<String>) -> Self {
        CliFailure {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

fn emit(text: &str, output: &OutputOptions) -> Result<(), CliFailure> {
    match &output.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliFailure::failure(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            if !text.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn lookup_kernel(id: &str) -> Result<RegistryEntry, CliFailure> {
    kernels::registry_lookup(id).map_err(|e| CliFailure::usage(e.to_string()))
}

fn lookup_weight(id: &str) -> Result<kernels::WeightSpec, CliFailure> {
    match id {
        "lanczos" => Ok(kernels::lanczos_weight()),
        "constant" => Ok(kernels::constant_weight()),
        "bump" => Ok(kernels::bump_weight()),
        "fabius" => Ok(kernels::fabius_weight()),
        _ => Err(CliFailure::usage(format!(
            "unknown weight `{id}` (expected lanczos, constant, bump, fabius)"
        ))),
    }
}

fn parse_fn(expr: &str) -> Result<functions::TestFn, CliFailure> {
    functions::parse_function(expr).map_err(|e| CliFailure::usage(e.to_string()))
}

fn diff_text(est: &differentiator::DerivativeEstimate, format: OutputFormat) -> String {
    match format {
        OutputFormat::Table => format!(
            "kernel:    {} (order {})\nx0:        {}\nh:         {}\nestimate:  {:.17}\nquad_err:  {:.3e}\n",
            est.kernel_id, est.order, est.x0, est.h, est.value, est.quad_error
        ),
        OutputFormat::Csv => format!(
            "kernel,order,x0,h,estimate,quad_error\n{},{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            est.kernel_id, est.order, est.x0, est.h, est.value, est.quad_error
        ),
    }
}

fn run_diff(
    kernel: String,
    n: Option<u32>,
    f: String,
    x0: f64,
    h: f64,
    quad_tol: f64,
    output: OutputOptions,
) -> Result<(), CliFailure> {
    let func = parse_fn(&f)?;
    let entry = lookup_kernel(&kernel)?;
    let (est, converged) = match entry {
        RegistryEntry::Kernel(k) => {
            let n = n.unwrap_or_else(|| k.order());
            match differentiator::estimate(|x| func(x), x0, n, h, &k, quad_tol) {
                Ok(est) => (est, true),
                Err(DifferentiatorError::NonConvergence(est)) => (*est, false),
                Err(e @ DifferentiatorError::OrderMismatch { .. })
                | Err(e @ DifferentiatorError::InvalidStep(_)) => {
                    return Err(CliFailure::usage(e.to_string()))
                }
                Err(e) => return Err(CliFailure::failure(e.to_string())),
            }
        }
        RegistryEntry::BoundaryWeight(w) => {
            if n.unwrap_or(1) != 1 {
                return Err(CliFailure::usage(format!(
                    "weight `{}` only supports order 1 (boundary-term path)",
                    w.id()
                )));
            }
            match differentiator::first_derivative_from_weight(|x| func(x), x0, h, &w, quad_tol) {
                Ok(est) => (est, true),
                Err(e @ DifferentiatorError::InvalidStep(_)) => {
                    return Err(CliFailure::usage(e.to_string()))
                }
                Err(e) => return Err(CliFailure::failure(e.to_string())),
            }
        }
    };
    emit(&diff_text(&est, output.format), &output)?;
    if converged {
        Ok(())
    } else {
        Err(CliFailure::failure(format!(
            "quadrature did not converge (error bound {:.3e})",
            est.quad_error
        )))
    }
}

fn run_validate(
    kernel: Option<String>,
    weight: Option<String>,
    n: u32,
    tol: f64,
    grid_size: usize,
    output: OutputOptions,
) -> Result<(), CliFailure> {
    let report = match (kernel, weight) {
        (Some(id), None) => match lookup_kernel(&id)? {
            RegistryEntry::Kernel(k) => validator::validate_kernel(&k, tol, grid_size)
                .map_err(|e| CliFailure::failure(e.to_string()))?,
            RegistryEntry::BoundaryWeight(w) => {
                // Checking the constant weight as if it were a kernel shows
                // precisely why it is a weight, not a kernel.
                let eval = w.eval_fn();
                let pseudo = KernelSpec::direct(w.id(), n.max(1), move |t| eval(t));
                validator::validate_kernel(&pseudo, tol, grid_size)
                    .map_err(|e| CliFailure::failure(e.to_string()))?
            }
        },
        (None, Some(id)) => {
            let w = lookup_weight(&id)?;
            validator::validate_weight(&w, n, tol)
        }
        _ => {
            return Err(CliFailure::usage(
                "validate requires exactly one of --kernel or --weight",
            ))
        }
    };

    let text = match output.format {
        OutputFormat::Table => format!("{report}"),
        OutputFormat::Csv => report.to_csv(),
    };
    emit(&text, &output)?;
    if report.verdict() {
        Ok(())
    } else {
        Err(CliFailure::failure(format!(
            "validation failed for {}",
            report.subject_id
        )))
    }
}

fn sweep_table(s: &differentiator::SweepResult) -> String {
    let mut out = format!(
        "kernel: {} (order {})  x0: {}  reference: {}\n",
        s.kernel_id,
        s.order,
        s.x0,
        s.reference.map_or("-".into(), |r| format!("{r}")),
    );
    out.push_str(&format!(
        "{:>12} {:>24} {:>14} {:>14}  converged\n",
        "h", "estimate", "abs_error", "quad_error"
    ));
    for r in &s.rows {
        let opt = |v: Option<f64>, width: usize| match v {
            Some(v) => format!("{:>width$.6e}", v),
            None => format!("{:>width$}", "-"),
        };
        out.push_str(&format!(
            "{:>12.4e} {:>24} {:>14} {:>14}  {}\n",
            r.h,
            r.value
                .map_or("-".to_string(), |v| format!("{:>24.16e}", v)),
            opt(r.abs_error, 14),
            opt(r.quad_error, 14),
            if r.converged { "yes" } else { "NO" }
        ));
    }
    if let Some(order) = s.observed_order {
        out.push_str(&format!("observed convergence order: {order:.3}\n"));
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    kernel: String,
    n: Option<u32>,
    f: String,
    x0: f64,
    h: String,
    reference: Option<f64>,
    quad_tol: f64,
    output: OutputOptions,
) -> Result<(), CliFailure> {
    let func = parse_fn(&f)?;
    let k = match lookup_kernel(&kernel)? {
        RegistryEntry::Kernel(k) => k,
        RegistryEntry::BoundaryWeight(w) => {
            return Err(CliFailure::usage(format!(
                "`{}` has no kernel path; sweep needs a genuine kernel id",
                w.id()
            )))
        }
    };
    let n = n.unwrap_or_else(|| k.order());
    let h_values: Vec<f64> = h
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliFailure::usage(format!("bad h list `{h}`")))?;

    let s = differentiator::sweep(|x| func(x), x0, n, &k, &h_values, reference, quad_tol)
        .map_err(|e| match e {
            DifferentiatorError::InvalidHValues | DifferentiatorError::OrderMismatch { .. } => {
                CliFailure::usage(e.to_string())
            }
            other => CliFailure::failure(other.to_string()),
        })?;

    let text = match output.format {
        OutputFormat::Table => sweep_table(&s),
        OutputFormat::Csv => s.to_csv(),
    };
    emit(&text, &output)?;
    if s.rows.iter().all(|r| r.converged) {
        Ok(())
    } else {
        Err(CliFailure::failure("one or more sweep rows did not converge"))
    }
}

fn run_fabius(
    x: Option<f64>,
    m: u32,
    export: Option<PathBuf>,
    import: Option<PathBuf>,
    grid_size: usize,
    tol: f64,
    max_iterations: u32,
) -> Result<(), CliFailure> {
    let table: FabiusTable = match import {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| {
                CliFailure::usage(format!("cannot read {}: {e}", path.display()))
            })?;
            FabiusTable::from_csv(&text).map_err(|e| CliFailure::usage(e.to_string()))?
        }
        None => {
            if grid_size == fabius::DEFAULT_TABLE_GRID
                && tol == fabius::DEFAULT_TOL
                && max_iterations == fabius::DEFAULT_MAX_ITERATIONS
            {
                (*fabius::default_table()).clone()
            } else {
                match fabius::build_table(grid_size, max_iterations, tol) {
                    Ok(t) => t,
                    Err(e @ FabiusError::NonConvergence { .. }) => {
                        return Err(CliFailure::failure(e.to_string()))
                    }
                    Err(e) => return Err(CliFailure::usage(e.to_string())),
                }
            }
        }
    };

    if let Some(path) = &export {
        fs::write(path, table.to_csv()).map_err(|e| {
            CliFailure::failure(format!("cannot write {}: {e}", path.display()))
        })?;
        println!("table exported to {}", path.display());
    }

    if let Some(x) = x {
        let value = if m == 0 {
            table.eval(x)
        } else {
            table.eval_derivative(x, m)
        }
        .map_err(|e| CliFailure::usage(e.to_string()))?;
        println!("{value}");
    } else if export.is_none() {
        return Err(CliFailure::usage("fabius requires --x and/or --export"));
    }
    Ok(())
}

fn run_kernels() -> Result<(), CliFailure> {
    for (id, desc) in kernels::registry_summary() {
        println!("{id:<14} {desc}");
    }
    Ok(())
}

/// Execute a parsed command line.
pub fn run(cli: Cli) -> Result<(), CliFailure> {
    match cli.command {
        Command::Diff {
            kernel,
            n,
            f,
            x0,
            h,
            quad_tol,
            output,
        } => run_diff(kernel, n, f, x0, h, quad_tol, output),
        Command::Validate {
            kernel,
            weight,
            n,
            tol,
            grid_size,
            output,
        } => run_validate(kernel, weight, n, tol, grid_size, output),
        Command::Sweep {
            kernel,
            n,
            f,
            x0,
            h,
            reference,
            quad_tol,
            output,
        } => run_sweep(kernel, n, f, x0, h, reference, quad_tol, output),
        Command::Fabius {
            x,
            m,
            export,
            import,
            grid_size,
            tol,
            max_iterations,
        } => run_fabius(x, m, export, import, grid_size, tol, max_iterations),
        Command::Kernels => run_kernels(),
    }
}
