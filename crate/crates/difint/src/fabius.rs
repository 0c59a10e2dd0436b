//! Evaluation of the Fabius function and its derivatives.
//!
//! The Fabius function `Fb` is the smooth, nowhere-analytic solution of the
//! differential functional equation `Fb'(x) = 2 Fb(2x)` with `Fb(0) = 0` and
//! the symmetry `Fb(1 - x) = 1 - Fb(x)` on `[0, 1]`. On `[0, 1]` it is built
//! here as the fixed point of the integral map
//!
//! ```text
//! (T F)(x) = integral of F from 0 to 2x          for x in [0, 1/2]
//! (T F)(x) = 1 - (T F)(1 - x)                    for x in (1/2, 1]
//! ```
//!
//! starting from `F0(x) = x`. Beyond 1 the function extends by
//! `Fb(x) = 1 - Fb(x - 1)` on `(1, 2]` and by the sign-folding rule
//! `Fb(x) = -Fb(x - 2^k)` for `x` in `(2^k, 2^(k+1)]`, which is the unique
//! extension consistent with `Fb'(x) = 2 Fb(2x)` on the whole half line
//! (checked a posteriori by the finite-difference residual tests below).

use std::sync::{Arc, LazyLock};

use crate::quadrature::GridFunction;

/// Default node count for the base table on [0, 1].
pub const DEFAULT_TABLE_GRID: usize = 4097;
/// Default fixed-point stopping tolerance (sup-norm change per iteration).
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: u32 = 200;
/// Largest derivative order the default table supports; arguments up to
/// `2^(DEFAULT_MAX_ORDER + 1)` are evaluable.
pub const DEFAULT_MAX_ORDER: u32 = 8;

const TABLE_INTERP_DEGREE: usize = 5;

#[derive(Debug, Clone, thiserror::Error)]
pub enum FabiusError {
    #[error("fixed point did not reach tolerance: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: u32 },
    #[error("argument {x} outside supported range [0, {max_argument}]")]
    OutOfRange { x: f64, max_argument: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("malformed table csv: {0}")]
    CsvFormat(String),
}

/// Tabulated Fabius function on [0, 1] plus the extension rules.
#[derive(Debug, Clone)]
pub struct FabiusTable {
    base: GridFunction,
    iterations: u32,
    residual: f64,
    residual_history: Vec<f64>,
    max_argument: f64,
}

impl FabiusTable {
    pub fn base(&self) -> &GridFunction {
        &self.base
    }

    pub fn iterations(&self) -> u32 {
        self.iterations
    }

    /// Sup-norm change of the last fixed-point iteration.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Sup-norm change per iteration, first to last.
    pub fn residual_history(&self) -> &[f64] {
        &self.residual_history
    }

    /// Largest supported argument for [`FabiusTable::eval`].
    pub fn max_argument(&self) -> f64 {
        self.max_argument
    }

    /// Fabius function value at `x`, for `0 <= x <= max_argument`.
    pub fn eval(&self, x: f64) -> Result<f64, FabiusError> {
        if !(0.0..=self.max_argument).contains(&x) || x.is_nan() {
            return Err(FabiusError::OutOfRange {
                x,
                max_argument: self.max_argument,
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// m-th derivative via the cascade `Fb^(m)(x) = 2^(m(m+1)/2) Fb(2^m x)`.
    pub fn eval_derivative(&self, x: f64, m: u32) -> Result<f64, FabiusError> {
        let arg = exp2_u32(m) * x;
        if x < 0.0 || arg > self.max_argument || arg.is_nan() {
            return Err(FabiusError::OutOfRange {
                x,
                max_argument: self.max_argument,
            });
        }
        let scale = (2.0_f64).powi((m * (m + 1) / 2) as i32);
        Ok(scale * self.eval_unchecked(arg))
    }

    /// Reduction to the base interval; valid for any finite x >= 0.
    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        let mut x = x;
        let mut sign = 1.0;
        while x > 2.0 {
            // x lies in (2^k, 2^(k+1)]: fold down by 2^k and flip sign.
            let mut k = x.log2().floor() as i32;
            if (2.0_f64).powi(k) == x {
                k -= 1;
            }
            x -= (2.0_f64).powi(k);
            sign = -sign;
        }
        let on_base = if x > 1.0 {
            1.0 - self.base.eval(x - 1.0)
        } else {
            self.base.eval(x)
        };
        sign * on_base
    }

    /// Serialize the base table as CSV (`x,value` rows) with the iteration
    /// metadata in leading comment lines.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# iterations={} residual={:.16e} max_argument={}\n",
            self.iterations, self.residual, self.max_argument
        ));
        out.push_str("x,value\n");
        for (x, v) in self.base.nodes().iter().zip(self.base.values()) {
            out.push_str(&format!("{:.16e},{:.16e}\n", x, v));
        }
        out
    }

    /// Rebuild a table from [`FabiusTable::to_csv`] output.
    pub fn from_csv(text: &str) -> Result<FabiusTable, FabiusError> {
        let mut iterations = 0;
        let mut residual = f64::NAN;
        let mut max_argument = exp2_u32(DEFAULT_MAX_ORDER + 1);
        let mut values = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line == "x,value" {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for field in meta.split_whitespace() {
                    if let Some((key, val)) = field.split_once('=') {
                        match key {
                            "iterations" => iterations = val.parse().unwrap_or(0),
                            "residual" => residual = val.parse().unwrap_or(f64::NAN),
                            "max_argument" => {
                                max_argument = val.parse().unwrap_or(max_argument)
                            }
                            _ => {}
                        }
                    }
                }
                continue;
            }
            let (_, v) = line
                .split_once(',')
                .ok_or_else(|| FabiusError::CsvFormat(format!("expected two columns: {line}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| FabiusError::CsvFormat(format!("bad value: {line}")))?;
            values.push(v);
        }
        if values.len() < 3 {
            return Err(FabiusError::CsvFormat("too few rows".into()));
        }
        let base = GridFunction::uniform(0.0, 1.0, values, TABLE_INTERP_DEGREE)
            .map_err(|_| FabiusError::CsvFormat("rows do not form a valid grid".into()))?;
        Ok(FabiusTable {
            base,
            iterations,
            residual,
            residual_history: Vec::new(),
            max_argument,
        })
    }
}

fn exp2_u32(e: u32) -> f64 {
    (2.0_f64).powi(e as i32)
}

/// Build the base table by fixed-point iteration of the integral map.
///
/// `grid_size` must be odd (even cell count) so that the doubling `x -> 2x`
/// lands on grid nodes, and at least 257.
pub fn build_table(
    grid_size: usize,
    max_iterations: u32,
    tol: f64,
) -> Result<FabiusTable, FabiusError> {
    build_table_with_max_order(grid_size, max_iterations, tol, DEFAULT_MAX_ORDER)
}

/// [`build_table`] with an explicit largest derivative order; the supported
/// argument range becomes `[0, 2^(max_order + 1)]`.
pub fn build_table_with_max_order(
    grid_size: usize,
    max_iterations: u32,
    tol: f64,
    max_order: u32,
) -> Result<FabiusTable, FabiusError> {
    if grid_size < 257 {
        return Err(FabiusError::InvalidGrid("grid_size must be >= 257"));
    }
    if grid_size.is_multiple_of(2) {
        return Err(FabiusError::InvalidGrid(
            "grid_size must be odd (even cell count)",
        ));
    }
    if !(tol > 0.0) {
        return Err(FabiusError::InvalidGrid("tol must be positive"));
    }

    let cells = grid_size - 1;
    let half = cells / 2;
    let mut values: Vec<f64> = (0..grid_size)
        .map(|i| i as f64 / cells as f64)
        .collect();

    let mut residual_history = Vec::new();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;

    for it in 1..=max_iterations {
        let grid = GridFunction::uniform(0.0, 1.0, values.clone(), TABLE_INTERP_DEGREE)
            .expect("table grid is valid by construction");
        let cell_ints = grid.cell_integrals();

        let mut next = vec![0.0; grid_size];
        let mut cum = 0.0;
        let mut cums = vec![0.0; grid_size];
        for (i, ci) in cell_ints.iter().enumerate() {
            cum += ci;
            cums[i + 1] = cum;
        }
        for i in 0..half {
            next[i] = cums[2 * i];
        }
        next[half] = 0.5;
        for i in half + 1..grid_size {
            next[i] = 1.0 - next[cells - i];
        }

        residual = values
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        residual_history.push(residual);
        values = next;
        iterations = it;
        if residual <= tol {
            break;
        }
    }

    if residual > tol {
        return Err(FabiusError::NonConvergence {
            residual,
            iterations,
        });
    }

    let base = GridFunction::uniform(0.0, 1.0, values, TABLE_INTERP_DEGREE)
        .expect("table grid is valid by construction");
    Ok(FabiusTable {
        base,
        iterations,
        residual,
        residual_history,
        max_argument: exp2_u32(max_order + 1),
    })
}

static DEFAULT_TABLE: LazyLock<Arc<FabiusTable>> = LazyLock::new(|| {
    Arc::new(
        build_table(DEFAULT_TABLE_GRID, DEFAULT_MAX_ITERATIONS, DEFAULT_TOL)
            .expect("default Fabius table construction converges"),
    )
});

/// Shared default table (grid 4097, tolerance 1e-12), built on first use.
pub fn default_table() -> Arc<FabiusTable> {
    Arc::clone(&DEFAULT_TABLE)
}
