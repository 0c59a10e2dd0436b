//! Differentiation by integration.
//!
//! The n-th derivative of a sampled function can be written as the h -> 0
//! limit of a one-dimensional integral against a kernel over a shrinking
//! window:
//!
//! ```text
//! f^(n)(x0) ~ (-1/h)^n * integral over [-1,1] of k(t) f(x0 + h t) dt
//! ```
//!
//! Any kernel works as long as its repeated antiderivatives vanish at +1 and
//! the n-th one integrates to 1; equivalently, k is the n-th derivative of a
//! weight with unit mass whose first n-1 derivatives vanish at both ends.
//! This crate provides:
//!
//! * [`quadrature`] -- adaptive integration robust to integrands that are
//!   extremely flat at the interval ends, plus grid-based antidifferentiation;
//! * [`kernels`] -- the classic parabolic (Lanczos) weight, the constant
//!   weight, Legendre kernels, exponential bump kernels for arbitrary order,
//!   and Fabius kernels, all addressable by string id;
//! * [`fabius`] -- evaluation of the Fabius function from a fixed point of
//!   its defining integral map;
//! * [`validator`] -- numerical pass/fail reports for the validity
//!   conditions of user or built-in weights and kernels;
//! * [`differentiator`] -- derivative estimates, central differences, and
//!   h-sweep convergence tables with CSV output;
//! * [`cli`] -- the `difint` command-line tool.

// Negated float comparisons like `!(h > 0.0)` are deliberate: they reject
// NaN along with the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod differentiator;
pub mod fabius;
pub mod functions;
pub mod kernels;
pub mod quadrature;
pub mod validator;

pub use differentiator::{central_difference, estimate, sweep, DerivativeEstimate, SweepResult};
pub use fabius::{build_table, FabiusTable};
pub use kernels::{KernelSpec, WeightSpec};
pub use quadrature::{antiderivative, integrate, GridFunction, QuadratureResult};
pub use validator::{validate_kernel, validate_weight, ValidationReport};
