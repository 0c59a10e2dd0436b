//! Property-based checks for the numerical core: algebraic identities of the
//! quadrature, estimator linearity, and serialization round-trips.

use proptest::prelude::*;

use difint::differentiator::{self, SweepResult, SweepRow};
use difint::fabius;
use difint::kernels;
use difint::quadrature;

fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    quadrature::integrate(f, a, b, 1e-12, quadrature::DEFAULT_MAX_SUBDIV)
        .unwrap()
        .value
}

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn poly_integral(coeffs: &[f64], a: f64, b: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, &c)| c / (i as f64 + 1.0) * (b.powi(i as i32 + 1) - a.powi(i as i32 + 1)))
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_is_linear(
        alpha in -5.0..5.0f64,
        beta in -5.0..5.0f64,
    ) {
        let f = |t: f64| t.exp();
        let g = |t: f64| (2.0 * t).sin();
        let lhs = quad(|t| alpha * f(t) + beta * g(t), -1.0, 1.0);
        let rhs = alpha * quad(f, -1.0, 1.0) + beta * quad(g, -1.0, 1.0);
        prop_assert!((lhs - rhs).abs() <= 1e-11);
    }

    #[test]
    fn quadrature_interval_additive(split in -0.95..0.95f64) {
        let f = |t: f64| (1.0 + t.cos()).sqrt();
        let whole = quad(f, -1.0, 1.0);
        let parts = quad(f, -1.0, split) + quad(f, split, 1.0);
        prop_assert!((whole - parts).abs() <= 1e-11);
    }

    #[test]
    fn quadrature_exact_on_polynomials(
        coeffs in prop::collection::vec(-3.0..3.0f64, 1..9),
        a in -2.0..0.0f64,
        width in 0.1..3.0f64,
    ) {
        // The base rule is exact for these degrees, so the value is correct to
        // rounding regardless of the requested tolerance.
        let b = a + width;
        let numeric = quadrature::integrate(
            |x| poly_eval(&coeffs, x), a, b, 1e-9, quadrature::DEFAULT_MAX_SUBDIV,
        ).unwrap().value;
        let exact = poly_integral(&coeffs, a, b);
        let scale = exact.abs().max(1.0);
        prop_assert!((numeric - exact).abs() / scale <= 1e-12,
            "numeric {numeric} vs exact {exact}");
    }

    #[test]
    fn estimator_linear_in_the_function(
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
        x0 in -1.0..1.0f64,
    ) {
        let k = kernels::lanczos_kernel();
        let h = 0.25;
        let quad_tol = 1e-11;
        let f = f64::exp;
        let g = f64::cos;
        let combined = differentiator::estimate(
            |x| alpha * f(x) + beta * g(x), x0, 1, h, &k, quad_tol,
        ).unwrap().value;
        let parts = alpha * differentiator::estimate(f, x0, 1, h, &k, quad_tol).unwrap().value
            + beta * differentiator::estimate(g, x0, 1, h, &k, quad_tol).unwrap().value;
        prop_assert!((combined - parts).abs() <= 10.0 * quad_tol / h);
    }

    #[test]
    fn estimator_annihilates_constants(c in -100.0..100.0f64, h in 0.05..1.0f64) {
        let k = kernels::legendre_kernel(2);
        let est = differentiator::estimate(|_| c, 0.0, 2, h, &k, 1e-11).unwrap();
        prop_assert!(est.value.abs() <= 1e-10 / (h * h) * c.abs().max(1.0));
    }

    #[test]
    fn fabius_symmetry_everywhere(x in 0.0..1.0f64) {
        let t = fabius::default_table();
        let r = t.eval(x).unwrap() + t.eval(1.0 - x).unwrap() - 1.0;
        prop_assert!(r.abs() <= 1e-10);
    }

    #[test]
    fn sweep_csv_round_trip(
        hs in prop::collection::vec(1e-6..1.0f64, 1..8),
        values in prop::collection::vec(-1e12..1e12f64, 8),
        errs in prop::collection::vec(1e-300..1.0f64, 8),
    ) {
        let mut hs = hs;
        hs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        hs.dedup();
        let rows: Vec<SweepRow> = hs.iter().enumerate().map(|(i, &h)| SweepRow {
            h,
            value: Some(values[i % values.len()]),
            abs_error: if i % 3 == 0 { None } else { Some(errs[i % errs.len()]) },
            quad_error: Some(errs[(i + 1) % errs.len()]),
            converged: true,
        }).collect();
        let s = SweepResult {
            kernel_id: "prop".into(),
            order: 1,
            x0: 0.0,
            reference: None,
            rows,
            observed_order: None,
        };
        let parsed = differentiator::parse_sweep_csv(&s.to_csv()).unwrap();
        prop_assert_eq!(parsed.len(), s.rows.len());
        for (a, b) in s.rows.iter().zip(&parsed) {
            prop_assert_eq!(a.h.to_bits(), b.h.to_bits());
            prop_assert_eq!(a.value.map(f64::to_bits), b.value.map(f64::to_bits));
            prop_assert_eq!(a.abs_error.map(f64::to_bits), b.abs_error.map(f64::to_bits));
            prop_assert_eq!(a.quad_error.map(f64::to_bits), b.quad_error.map(f64::to_bits));
        }
    }

    #[test]
    fn grid_function_interpolates_its_nodes(
        values in prop::collection::vec(-10.0..10.0f64, 16..64),
    ) {
        let g = quadrature::GridFunction::uniform(-1.0, 1.0, values.clone(), 3).unwrap();
        for (x, v) in g.nodes().iter().zip(g.values()) {
            prop_assert!((g.eval(*x) - v).abs() <= 1e-9 * v.abs().max(1.0));
        }
    }
}
