//! Derivative estimation through the kernel integral and h-sweep studies.
//!
//! The estimator computes `f^(n)(x0) ~ (-1/h)^n * integral of k(t) f(x0 + h t)`
//! over [-1, 1]. The `1/h^n` amplification of quadrature error is surfaced in
//! the estimate so callers can see when h is too small for the quadrature
//! budget. Convergence rates are reported from sweeps, never asserted.

use crate::kernels::{KernelSpec, WeightSpec};
use crate::quadrature::{self, QuadratureError};

/// Default quadrature tolerance for derivative estimates.
pub const DEFAULT_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, thiserror::Error)]
pub enum DifferentiatorError {
    #[error("kernel `{kernel_id}` targets order {kernel_order}, requested order {requested}")]
    OrderMismatch {
        kernel_id: String,
        kernel_order: u32,
        requested: u32,
    },
    #[error("step h must be positive, got {0}")]
    InvalidStep(f64),
    #[error("h values must be nonempty, positive and strictly decreasing")]
    InvalidHValues,
    #[error("weight `{0}` does not provide a first derivative")]
    WeightDerivativeUnavailable(String),
    #[error("quadrature did not converge (estimate {} with error {:.3e})", .0.value, .0.quad_error)]
    NonConvergence(Box<DerivativeEstimate>),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("malformed sweep csv: {0}")]
    CsvFormat(String),
}

/// One derivative estimate at a specific step.
#[derive(Debug, Clone)]
pub struct DerivativeEstimate {
    pub value: f64,
    pub order: u32,
    pub h: f64,
    pub x0: f64,
    pub kernel_id: String,
    /// Quadrature error bound scaled by the h^-n amplification.
    pub quad_error: f64,
}

/// Estimate the n-th derivative of `f` at `x0` with half-width `h` using a
/// kernel of matching order.
pub fn estimate<F: Fn(f64) -> f64>(
    f: F,
    x0: f64,
    n: u32,
    h: f64,
    kernel: &KernelSpec,
    quad_tol: f64,
) -> Result<DerivativeEstimate, DifferentiatorError> {
    if !(h > 0.0) {
        return Err(DifferentiatorError::InvalidStep(h));
    }
    if kernel.order() != n || n == 0 {
        return Err(DifferentiatorError::OrderMismatch {
            kernel_id: kernel.id().to_string(),
            kernel_order: kernel.order(),
            requested: n,
        });
    }

    let factor = (-1.0 / h).powi(n as i32);
    let build = |r: quadrature::QuadratureResult| DerivativeEstimate {
        value: factor * r.value,
        order: n,
        h,
        x0,
        kernel_id: kernel.id().to_string(),
        quad_error: factor.abs() * r.error_estimate,
    };

    match quadrature::integrate(
        |t| kernel.eval(t) * f(x0 + h * t),
        -1.0,
        1.0,
        quad_tol,
        quadrature::DEFAULT_MAX_SUBDIV,
    ) {
        Ok(r) => Ok(build(r)),
        Err(QuadratureError::NonConvergence(r)) => {
            Err(DifferentiatorError::NonConvergence(Box::new(build(r))))
        }
        Err(e) => Err(DifferentiatorError::Quadrature(e)),
    }
}

/// Two-point central difference `(f(x0+h) - f(x0-h)) / (2h)`.
pub fn central_difference<F: Fn(f64) -> f64>(f: F, x0: f64, h: f64) -> f64 {
    (f(x0 + h) - f(x0 - h)) / (2.0 * h)
}

/// First derivative from a weight through the full integration-by-parts
/// identity, boundary term included:
///
/// ```text
/// f'(x0) ~ (1/h) [w(1) f(x0+h) - w(-1) f(x0-h)] - (1/h) integral w'(t) f(x0+ht) dt
/// ```
///
/// Weights whose endpoint values do not vanish (the constant weight) are
/// handled exactly here instead of being forced through the kernel path; for
/// w = 0.5 this reproduces the central difference.
pub fn first_derivative_from_weight<F: Fn(f64) -> f64>(
    f: F,
    x0: f64,
    h: f64,
    weight: &WeightSpec,
    quad_tol: f64,
) -> Result<DerivativeEstimate, DifferentiatorError> {
    if !(h > 0.0) {
        return Err(DifferentiatorError::InvalidStep(h));
    }
    let d1 = weight
        .derivative(1)
        .ok_or_else(|| DifferentiatorError::WeightDerivativeUnavailable(weight.id().to_string()))?;

    let boundary = (weight.eval(1.0) * f(x0 + h) - weight.eval(-1.0) * f(x0 - h)) / h;
    let r = quadrature::integrate(
        |t| d1(t) * f(x0 + h * t),
        -1.0,
        1.0,
        quad_tol,
        quadrature::DEFAULT_MAX_SUBDIV,
    )?;
    Ok(DerivativeEstimate {
        value: boundary - r.value / h,
        order: 1,
        h,
        x0,
        kernel_id: weight.id().to_string(),
        quad_error: r.error_estimate / h,
    })
}

/// One row of an h-sweep. `value` is absent when the estimate failed hard;
/// a non-converged quadrature still reports its flagged value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub value: Option<f64>,
    pub abs_error: Option<f64>,
    pub quad_error: Option<f64>,
    pub converged: bool,
}

/// Tabulated h-sweep with optional reference derivative and the observed
/// log-log convergence slope.
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub kernel_id: String,
    pub order: u32,
    pub x0: f64,
    pub reference: Option<f64>,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of log|error| against log h, when computable.
    pub observed_order: Option<f64>,
}

/// Run estimates across a strictly decreasing list of h values.
pub fn sweep<F: Fn(f64) -> f64>(
    f: F,
    x0: f64,
    n: u32,
    kernel: &KernelSpec,
    h_values: &[f64],
    reference: Option<f64>,
    quad_tol: f64,
) -> Result<SweepResult, DifferentiatorError> {
    if h_values.is_empty()
        || h_values.iter().any(|&h| !(h > 0.0))
        || h_values.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(DifferentiatorError::InvalidHValues);
    }

    let mut rows = Vec::with_capacity(h_values.len());
    for &h in h_values {
        let row = match estimate(&f, x0, n, h, kernel, quad_tol) {
            Ok(est) => SweepRow {
                h,
                value: Some(est.value),
                abs_error: reference.map(|r| (est.value - r).abs()),
                quad_error: Some(est.quad_error),
                converged: true,
            },
            Err(DifferentiatorError::NonConvergence(est)) => SweepRow {
                h,
                value: Some(est.value),
                abs_error: reference.map(|r| (est.value - r).abs()),
                quad_error: Some(est.quad_error),
                converged: false,
            },
            Err(DifferentiatorError::OrderMismatch {
                kernel_id,
                kernel_order,
                requested,
            }) => {
                // Misconfiguration, not a per-row numerical failure.
                return Err(DifferentiatorError::OrderMismatch {
                    kernel_id,
                    kernel_order,
                    requested,
                });
            }
            Err(_) => SweepRow {
                h,
                value: None,
                abs_error: None,
                quad_error: None,
                converged: false,
            },
        };
        rows.push(row);
    }

    let observed_order = log_log_slope(&rows);
    Ok(SweepResult {
        kernel_id: kernel.id().to_string(),
        order: n,
        x0,
        reference,
        rows,
        observed_order,
    })
}

fn log_log_slope(rows: &[SweepRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.converged)
        .filter_map(|r| r.abs_error.map(|e| (r.h, e)))
        .filter(|&(_, e)| e > 0.0)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let nf = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}

fn fmt17(v: f64) -> String {
    format!("{:.16e}", v)
}

impl SweepResult {
    /// CSV serialization: `h,estimate,abs_error,quad_error`, full double
    /// precision (17 significant digits), locale-independent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("h,estimate,abs_error,quad_error\n");
        for r in &self.rows {
            let field = |v: Option<f64>| v.map(fmt17).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt17(r.h),
                field(r.value),
                field(r.abs_error),
                field(r.quad_error)
            ));
        }
        out
    }
}

/// Parse rows emitted by [`SweepResult::to_csv`]. Round-trips bit-exactly.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>, DifferentiatorError> {
    let mut lines = text.lines();
    match lines.next() {
        Some("h,estimate,abs_error,quad_error") => {}
        other => {
            return Err(DifferentiatorError::CsvFormat(format!(
                "unexpected header {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(DifferentiatorError::CsvFormat(format!(
                "expected 4 columns: {line}"
            )));
        }
        let parse = |s: &str| -> Result<Option<f64>, DifferentiatorError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| DifferentiatorError::CsvFormat(format!("bad number `{s}`")))
            }
        };
        let h = parse(fields[0])?
            .ok_or_else(|| DifferentiatorError::CsvFormat("missing h".into()))?;
        rows.push(SweepRow {
            h,
            value: parse(fields[1])?,
            abs_error: parse(fields[2])?,
            quad_error: parse(fields[3])?,
            converged: true,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels;

    #[test]
    fn quadratic_exact_for_lanczos() {
        let k = kernels::lanczos_kernel();
        for h in [1.0, 0.4, 0.05] {
            let est = estimate(|x| x * x, 3.0, 1, h, &k, 1e-12).unwrap();
            assert!(
                (est.value - 6.0).abs() <= 1e-12 / h,
                "h={h}: {}",
                est.value
            );
        }
    }

    #[test]
    fn sine_derivative_accuracy() {
        let k = kernels::lanczos_kernel();
        let est = estimate(f64::sin, 0.5, 1, 1e-3, &k, 1e-12).unwrap();
        assert!((est.value - 0.5_f64.cos()).abs() <= 1e-6);
        assert_eq!(est.kernel_id, "lanczos");
        assert!(est.quad_error <= 1e-8);
    }

    #[test]
    fn absolute_value_at_kink() {
        let k = kernels::lanczos_kernel();
        let est = estimate(f64::abs, 0.0, 1, 0.1, &k, 1e-12).unwrap();
        assert!(est.value.abs() <= 1e-10);
    }

    #[test]
    fn order_mismatch_rejected() {
        let k = kernels::legendre_kernel(2);
        assert!(matches!(
            estimate(f64::exp, 0.0, 1, 0.1, &k, 1e-10),
            Err(DifferentiatorError::OrderMismatch { .. })
        ));
        assert!(matches!(
            estimate(f64::exp, 0.0, 2, -0.1, &k, 1e-10),
            Err(DifferentiatorError::InvalidStep(_))
        ));
    }

    #[test]
    fn central_difference_values() {
        assert_eq!(central_difference(|x| x * x, 1.0, 0.5), 2.0);
        let got = central_difference(f64::exp, 0.0, 0.1);
        let want = (0.1_f64.exp() - (-0.1_f64).exp()) / 0.2;
        assert_eq!(got, want);
        assert!((got - 1.0016675001984403).abs() <= 1e-12);
    }

    #[test]
    fn boundary_term_path_recovers_central_difference() {
        let w = kernels::constant_weight();
        for (x0, h) in [(0.0, 0.5), (0.5, 1e-2), (-1.2, 1e-3)] {
            let est = first_derivative_from_weight(f64::exp, x0, h, &w, 1e-12).unwrap();
            let cd = central_difference(f64::exp, x0, h);
            assert!(
                (est.value - cd).abs() <= 1e-10,
                "x0={x0} h={h}: {} vs {cd}",
                est.value
            );
        }
    }

    #[test]
    fn boundary_term_vanishes_for_valid_weight() {
        // For the parabolic weight the boundary term is zero, so the full
        // identity agrees with the plain kernel path.
        let w = kernels::lanczos_weight();
        let k = kernels::lanczos_kernel();
        let ibp = first_derivative_from_weight(f64::sin, 0.3, 0.05, &w, 1e-12).unwrap();
        let plain = estimate(f64::sin, 0.3, 1, 0.05, &k, 1e-12).unwrap();
        assert!((ibp.value - plain.value).abs() <= 1e-12);
    }

    #[test]
    fn estimate_linearity() {
        let k = kernels::bump_kernel(1);
        let quad_tol = 1e-11;
        let h = 0.2;
        let f = f64::exp;
        let g = f64::sin;
        let (a, b) = (2.0, -3.0);
        let combined = estimate(|x| a * f(x) + b * g(x), 0.4, 1, h, &k, quad_tol)
            .unwrap()
            .value;
        let separate = a * estimate(f, 0.4, 1, h, &k, quad_tol).unwrap().value
            + b * estimate(g, 0.4, 1, h, &k, quad_tol).unwrap().value;
        assert!((combined - separate).abs() <= 10.0 * quad_tol / h);
    }

    #[test]
    fn constants_annihilated() {
        for id in ["lanczos", "legendre:2", "bump:3", "fabius:1"] {
            let k = match kernels::registry_lookup(id).unwrap() {
                kernels::RegistryEntry::Kernel(k) => k,
                _ => unreachable!(),
            };
            let n = k.order();
            let est = estimate(|_| 4.25, 1.0, n, 0.3, &k, 1e-11).unwrap();
            assert!(
                est.value.abs() <= 1e-11 * 0.3_f64.powi(-(n as i32)) * 10.0,
                "{id}: {}",
                est.value
            );
        }
    }

    #[test]
    fn cubic_sweep_is_exact_per_row() {
        let k = kernels::legendre_kernel(3);
        let hs = [1.0, 0.5, 0.25];
        let s = sweep(|x| x * x * x, 0.7, 3, &k, &hs, Some(6.0), 1e-12).unwrap();
        for row in &s.rows {
            assert!(row.converged);
            assert!(row.abs_error.unwrap() <= 1e-8, "h={}: {:?}", row.h, row);
        }
    }

    #[test]
    fn exp_sweep_errors_decrease() {
        let k = kernels::bump_kernel(2);
        let hs = [0.5, 0.25, 0.125, 0.0625];
        let s = sweep(f64::exp, 0.0, 2, &k, &hs, Some(1.0), 1e-12).unwrap();
        let errs: Vec<f64> = s.rows.iter().map(|r| r.abs_error.unwrap()).collect();
        for w in errs.windows(2) {
            assert!(w[1] < w[0], "errors not decreasing: {errs:?}");
        }
        // Even weight: quadratic convergence, reported not asserted exactly.
        let slope = s.observed_order.unwrap();
        assert!(slope > 1.0, "slope {slope}");
    }

    #[test]
    fn sweep_without_reference_has_no_errors() {
        let k = kernels::lanczos_kernel();
        let s = sweep(f64::exp, 0.0, 1, &k, &[0.5, 0.25], None, 1e-10).unwrap();
        assert!(s.rows.iter().all(|r| r.abs_error.is_none()));
        assert!(s.observed_order.is_none());
    }

    #[test]
    fn sweep_rejects_bad_h_lists() {
        let k = kernels::lanczos_kernel();
        for hs in [vec![], vec![0.5, 0.5], vec![0.25, 0.5], vec![0.5, -0.1]] {
            assert!(matches!(
                sweep(f64::exp, 0.0, 1, &k, &hs, None, 1e-10),
                Err(DifferentiatorError::InvalidHValues)
            ));
        }
    }

    #[test]
    fn kernel_families_agree_in_the_limit() {
        // Pairwise differences between first-order kernels shrink along a sweep.
        let ks = [
            kernels::legendre_kernel(1),
            kernels::bump_kernel(1),
            kernels::fabius_kernel(1).unwrap(),
        ];
        let hs = [0.4, 0.1, 0.025];
        let mut values = vec![Vec::new(); ks.len()];
        for (i, k) in ks.iter().enumerate() {
            for &h in &hs {
                values[i].push(estimate(f64::exp, 0.3, 1, h, k, 1e-12).unwrap().value);
            }
        }
        for a in 0..ks.len() {
            for b in a + 1..ks.len() {
                let d_first = (values[a][0] - values[b][0]).abs();
                let d_last = (values[a][2] - values[b][2]).abs();
                assert!(
                    d_last < d_first.max(1e-12),
                    "{a} vs {b}: {d_first} -> {d_last}"
                );
            }
        }
    }

    #[test]
    fn wrong_normalization_scales_the_result() {
        // A kernel rescaled by 2 converges to twice the derivative.
        let k = kernels::lanczos_kernel().scaled(2.0, "lanczos*2");
        let est = estimate(f64::exp, 0.0, 1, 1e-3, &k, 1e-12).unwrap();
        assert!((est.value - 2.0).abs() <= 1e-4, "{}", est.value);
    }

    #[test]
    fn csv_round_trip_bit_exact() {
        let k = kernels::lanczos_kernel();
        let s = sweep(
            f64::sin,
            0.5,
            1,
            &k,
            &[0.5, 0.125, 3.2e-2],
            Some(0.5_f64.cos()),
            1e-11,
        )
        .unwrap();
        let csv = s.to_csv();
        let rows = parse_sweep_csv(&csv).unwrap();
        assert_eq!(rows.len(), s.rows.len());
        for (orig, back) in s.rows.iter().zip(&rows) {
            assert_eq!(orig.h.to_bits(), back.h.to_bits());
            assert_eq!(orig.value, back.value);
            assert_eq!(orig.abs_error, back.abs_error);
            assert_eq!(orig.quad_error, back.quad_error);
        }
        assert!(parse_sweep_csv("nope\n").is_err());
    }
}
