//! Numerical validity checks for weights and kernels.
//!
//! A weight is valid at order n when `w^(k)(-1) = w^(k)(1) = 0` for
//! `k = 0..n-1` and `integral(w) = 1`. A kernel of order n is valid when its
//! repeated antiderivatives (normalized to vanish at -1) satisfy
//! `k0^(-m)(1) = 0` for `m = 1..n` and `integral(k0^(-n)) = 1`; for n = 1 the
//! first condition is equivalent to `integral(k) = 0`, which is checked and
//! cross-asserted as well. Every check is a residual against a tolerance;
//! nothing is assumed symbolically.

use crate::kernels::{KernelSpec, WeightSpec};
use crate::quadrature::{self, GridFunction, QuadratureError};

/// Default tolerance for validity verdicts.
pub const DEFAULT_VALIDATION_TOL: f64 = 1e-9;
/// Default antiderivative grid for kernel validation.
pub const DEFAULT_VALIDATION_GRID: usize = quadrature::DEFAULT_GRID_SIZE;

/// Interpolation degree for validation antiderivatives: two nested numeric
/// antiderivatives must stay well below the verdict tolerance even for
/// kernels with fast-growing higher derivatives.
const VALIDATION_INTERP_DEGREE: usize = 5;
/// Offset for the limit-form endpoint checks on non-analytic weights.
const ENDPOINT_EPS: f64 = 1e-8;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ValidatorError {
    #[error("kernel `{subject}` violates endpoint condition {condition} (residual {residual:.3e})")]
    EndpointViolation {
        subject: String,
        condition: String,
        residual: f64,
    },
    #[error("kernel `{subject}` has numerically zero area integral ({area:.3e}); cannot normalize")]
    NotNormalizable { subject: String, area: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

/// One checked condition.
#[derive(Debug, Clone)]
pub struct ConditionResidual {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Residuals and verdict for one weight or kernel at one order.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub subject_id: String,
    pub order: u32,
    pub conditions: Vec<ConditionResidual>,
}

impl ValidationReport {
    fn new(subject_id: impl Into<String>, order: u32) -> Self {
        ValidationReport {
            subject_id: subject_id.into(),
            order,
            conditions: Vec::new(),
        }
    }

    fn push(&mut self, name: impl Into<String>, residual: f64, tolerance: f64) {
        let residual = residual.abs();
        self.conditions.push(ConditionResidual {
            name: name.into(),
            pass: residual <= tolerance,
            residual,
            tolerance,
        });
    }

    fn push_unavailable(&mut self, name: impl Into<String>, tolerance: f64) {
        self.conditions.push(ConditionResidual {
            name: format!("{} (derivative unavailable)", name.into()),
            residual: f64::INFINITY,
            tolerance,
            pass: false,
        });
    }

    /// True iff every condition passed.
    pub fn verdict(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    /// First condition whose name contains `needle`.
    pub fn find(&self, needle: &str) -> Option<&ConditionResidual> {
        self.conditions.iter().find(|c| c.name.contains(needle))
    }

    /// CSV rows: `condition,residual,tolerance,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,residual,tolerance,pass\n");
        for c in &self.conditions {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{}\n",
                c.name, c.residual, c.tolerance, c.pass
            ));
        }
        out
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "subject: {} (order {}) -- verdict: {}",
            self.subject_id,
            self.order,
            if self.verdict() { "PASS" } else { "FAIL" }
        )?;
        writeln!(f, "  {:<38} {:>12} {:>12}  pass", "condition", "residual", "tolerance")?;
        for c in &self.conditions {
            writeln!(
                f,
                "  {:<38} {:>12.3e} {:>12.3e}  {}",
                c.name,
                c.residual,
                c.tolerance,
                if c.pass { "yes" } else { "NO" }
            )?;
        }
        Ok(())
    }
}

fn quad_tol_for(tol: f64) -> f64 {
    (tol * 1e-3).clamp(1e-14, 1e-10)
}

fn integral_residual(f: impl Fn(f64) -> f64, target: f64, tol: f64) -> f64 {
    match quadrature::integrate(f, -1.0, 1.0, quad_tol_for(tol), quadrature::DEFAULT_MAX_SUBDIV) {
        Ok(r) => (r.value - target).abs(),
        Err(e) => match e.partial_result() {
            Some(r) => (r.value - target).abs(),
            None => f64::INFINITY,
        },
    }
}

/// Check the order-n weight conditions: vanishing endpoint derivatives for
/// `k = 0..n-1` and unit integral.
///
/// For weights whose endpoint derivatives exist only as continuous extensions
/// the report carries both the exact endpoint values and the limit form at
/// `1 - 1e-8` inside the interval.
pub fn validate_weight(w: &WeightSpec, n: u32, tol: f64) -> ValidationReport {
    let mut report = ValidationReport::new(w.id(), n);
    for k in 0..n {
        match w.derivative(k) {
            Some(d) => {
                report.push(format!("w^({k})(-1)"), d(-1.0), tol);
                report.push(format!("w^({k})(+1)"), d(1.0), tol);
                if w.endpoint_limit() {
                    report.push(format!("w^({k})(-1) limit"), d(-1.0 + ENDPOINT_EPS), tol);
                    report.push(format!("w^({k})(+1) limit"), d(1.0 - ENDPOINT_EPS), tol);
                }
            }
            None => {
                report.push_unavailable(format!("w^({k})(-1)"), tol);
                report.push_unavailable(format!("w^({k})(+1)"), tol);
            }
        }
    }
    let weight = w.eval_fn();
    report.push(
        "integral(w) - 1",
        integral_residual(move |t| weight(t), 1.0, tol),
        tol,
    );
    report
}

fn antiderivative_chain(
    k: &KernelSpec,
    grid_size: usize,
) -> Result<Vec<GridFunction>, QuadratureError> {
    let n = k.order();
    let mut chain = Vec::with_capacity(n as usize);
    let first = quadrature::antiderivative_with_degree(
        |t| k.eval(t),
        grid_size,
        VALIDATION_INTERP_DEGREE,
    )?;
    chain.push(first);
    for _ in 1..n {
        let prev = chain.last().unwrap();
        let next = quadrature::antiderivative_with_degree(
            |t| prev.eval(t),
            grid_size,
            VALIDATION_INTERP_DEGREE,
        )?;
        chain.push(next);
    }
    Ok(chain)
}

/// Check the order-n kernel conditions by repeated numerical
/// antidifferentiation: `k0^(-m)(1) = 0` for `m = 1..n` and
/// `integral(k0^(-n)) = 1`. For n = 1 the direct integral of k is also
/// reported together with its consistency against `k0^(-1)(1)`.
pub fn validate_kernel(
    k: &KernelSpec,
    tol: f64,
    grid_size: usize,
) -> Result<ValidationReport, ValidatorError> {
    let n = k.order();
    let mut report = ValidationReport::new(k.id(), n);
    let chain = antiderivative_chain(k, grid_size)?;

    for (idx, g) in chain.iter().enumerate() {
        report.push(format!("k0^(-{})(1)", idx + 1), g.end_value(), tol);
    }
    let area = chain.last().unwrap().integral();
    report.push(format!("integral(k0^(-{n})) - 1"), area - 1.0, tol);

    if n == 1 {
        let direct = match quadrature::integrate(
            |t| k.eval(t),
            -1.0,
            1.0,
            quad_tol_for(tol),
            quadrature::DEFAULT_MAX_SUBDIV,
        ) {
            Ok(r) => r.value,
            Err(e) => e.partial_result().map(|r| r.value).unwrap_or(f64::INFINITY),
        };
        report.push("integral(k)", direct, tol);
        let consistency = (direct.abs() - chain[0].end_value().abs()).abs();
        report.push("integral(k) consistency", consistency, tol);
    }
    Ok(report)
}

/// Validate with default tolerance and grid.
pub fn validate_kernel_default(k: &KernelSpec) -> Result<ValidationReport, ValidatorError> {
    validate_kernel(k, DEFAULT_VALIDATION_TOL, DEFAULT_VALIDATION_GRID)
}

/// A rescaled kernel together with the applied factor.
#[derive(Debug, Clone)]
pub struct NormalizedKernel {
    pub kernel: KernelSpec,
    pub scale: f64,
}

/// Rescale a kernel that satisfies all endpoint conditions so that the area
/// condition holds exactly: divides by `integral(k0^(-n))`.
pub fn normalize_kernel(
    k: &KernelSpec,
    tol: f64,
    grid_size: usize,
) -> Result<NormalizedKernel, ValidatorError> {
    let chain = antiderivative_chain(k, grid_size)?;
    for (idx, g) in chain.iter().enumerate() {
        let residual = g.end_value().abs();
        if residual > tol {
            return Err(ValidatorError::EndpointViolation {
                subject: k.id().to_string(),
                condition: format!("k0^(-{})(1)", idx + 1),
                residual,
            });
        }
    }
    let area = chain.last().unwrap().integral();
    if area.abs() <= 1e-13 {
        return Err(ValidatorError::NotNormalizable {
            subject: k.id().to_string(),
            area,
        });
    }
    let scale = 1.0 / area;
    Ok(NormalizedKernel {
        kernel: k.scaled(scale, format!("{}[normalized]", k.id())),
        scale,
    })
}
