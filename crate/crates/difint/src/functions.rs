//! Small fixed corpus of test functions and the id grammar the CLI accepts.
//!
//! The grammar is deliberately tiny: named functions plus
//! `poly:c0,c1,...` for polynomials with explicit coefficients. This is not
//! an expression parser.

use std::sync::Arc;

pub type TestFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum FunctionError {
    #[error("unknown function `{0}` (expected one of {known}, or poly:c0,c1,...)", known = KNOWN_IDS.join(", "))]
    UnknownFunction(String),
    #[error("bad polynomial coefficient in `{0}`")]
    BadCoefficient(String),
}

pub const KNOWN_IDS: &[&str] = &["sin", "cos", "exp", "abs", "xabs", "tanh"];

/// Resolve a function id to a callable.
pub fn parse_function(expr: &str) -> Result<TestFn, FunctionError> {
    match expr {
        "sin" => return Ok(Arc::new(f64::sin)),
        "cos" => return Ok(Arc::new(f64::cos)),
        "exp" => return Ok(Arc::new(f64::exp)),
        "abs" => return Ok(Arc::new(f64::abs)),
        "xabs" => return Ok(Arc::new(|x: f64| x * x.abs())),
        "tanh" => return Ok(Arc::new(f64::tanh)),
        _ => {}
    }
    if let Some(list) = expr.strip_prefix("poly:") {
        let mut coeffs = Vec::new();
        for part in list.split(',') {
            let c: f64 = part
                .trim()
                .parse()
                .map_err(|_| FunctionError::BadCoefficient(expr.to_string()))?;
            coeffs.push(c);
        }
        if coeffs.is_empty() {
            return Err(FunctionError::BadCoefficient(expr.to_string()));
        }
        return Ok(Arc::new(move |x: f64| {
            let mut acc = 0.0;
            for &c in coeffs.iter().rev() {
                acc = acc * x + c;
            }
            acc
        }));
    }
    Err(FunctionError::UnknownFunction(expr.to_string()))
}

/// Reference corpus used by the sweep tests: smooth functions, polynomials up
/// to degree 6, and the non-smooth probes from the generalized-derivative
/// discussion (|x| and x|x| at 0, a smoothed step).
pub fn corpus() -> Vec<(&'static str, TestFn)> {
    [
        "sin",
        "exp",
        "abs",
        "xabs",
        "tanh",
        "poly:1,2",
        "poly:0,0,1",
        "poly:0,0,0,1",
        "poly:3,-1,0.5,2,0,1,0.25",
    ]
    .into_iter()
    .map(|id| (id, parse_function(id).expect("corpus ids are valid")))
    .collect()
}
