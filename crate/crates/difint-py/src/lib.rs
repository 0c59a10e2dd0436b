//! Python bindings for `difint`.
//!
//! The module exposes Fabius evaluation, the kernel registry, adaptive
//! integration, derivative estimation, h-sweeps and the validity checks.
//! Functions accept either a corpus id string (`"sin"`, `"poly:0,0,1"`, ...)
//! or any Python callable as the target function.

use std::cell::RefCell;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use difint::differentiator::{self, DifferentiatorError};
use difint::fabius;
use difint::kernels::{self, KernelSpec, RegistryEntry};
use difint::quadrature;
use difint::validator;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

enum Target<'py> {
    Native(difint::functions::TestFn),
    Callable(Bound<'py, PyAny>),
}

impl<'py> Target<'py> {
    fn resolve(f: &Bound<'py, PyAny>) -> PyResult<Self> {
        if let Ok(id) = f.extract::<String>() {
            return difint::functions::parse_function(&id)
                .map(Target::Native)
                .map_err(value_err);
        }
        if f.is_callable() {
            return Ok(Target::Callable(f.clone()));
        }
        Err(PyValueError::new_err(
            "f must be a function id string or a callable",
        ))
    }

    /// Run `body` with the target as a plain real function. A Python
    /// exception raised inside the callable is stashed (the sample turns into
    /// NaN, which the numerics reject) and re-raised afterwards.
    fn with<R>(
        &self,
        body: impl FnOnce(&dyn Fn(f64) -> f64) -> R,
    ) -> Result<R, PyErr> {
        match self {
            Target::Native(g) => {
                let g = g.clone();
                Ok(body(&move |t| g(t)))
            }
            Target::Callable(obj) => {
                let slot: RefCell<Option<PyErr>> = RefCell::new(None);
                let call = |t: f64| -> f64 {
                    match obj.call1((t,)).and_then(|v| v.extract::<f64>()) {
                        Ok(v) => v,
                        Err(e) => {
                            slot.borrow_mut().get_or_insert(e);
                            f64::NAN
                        }
                    }
                };
                let out = body(&call);
                match slot.into_inner() {
                    Some(e) => Err(e),
                    None => Ok(out),
                }
            }
        }
    }
}

fn resolve_entry(id: &str) -> PyResult<RegistryEntry> {
    kernels::registry_lookup(id).map_err(value_err)
}

fn resolve_kernel(id: &str) -> PyResult<KernelSpec> {
    match resolve_entry(id)? {
        RegistryEntry::Kernel(k) => Ok(k),
        RegistryEntry::BoundaryWeight(w) => Err(PyValueError::new_err(format!(
            "`{}` is a weight handled through the boundary-term path, not a kernel",
            w.id()
        ))),
    }
}

/// One derivative estimate.
#[pyclass(frozen, get_all, skip_from_py_object, module = "difint_py")]
#[derive(Clone)]
struct Estimate {
    value: f64,
    order: u32,
    h: f64,
    x0: f64,
    kernel: String,
    quad_error: f64,
    converged: bool,
}

#[pymethods]
impl Estimate {
    fn __repr__(&self) -> String {
        format!(
            "Estimate(value={}, order={}, h={}, x0={}, kernel='{}', quad_error={:.3e}, converged={})",
            self.value, self.order, self.h, self.x0, self.kernel, self.quad_error, self.converged
        )
    }
}

impl From<differentiator::DerivativeEstimate> for Estimate {
    fn from(e: differentiator::DerivativeEstimate) -> Self {
        Estimate {
            value: e.value,
            order: e.order,
            h: e.h,
            x0: e.x0,
            kernel: e.kernel_id,
            quad_error: e.quad_error,
            converged: true,
        }
    }
}

/// Residuals and verdict of a validity check.
#[pyclass(frozen, module = "difint_py")]
struct Validation {
    inner: validator::ValidationReport,
}

#[pymethods]
impl Validation {
    #[getter]
    fn subject(&self) -> String {
        self.inner.subject_id.clone()
    }

    #[getter]
    fn order(&self) -> u32 {
        self.inner.order
    }

    #[getter]
    fn verdict(&self) -> bool {
        self.inner.verdict()
    }

    /// List of (condition, residual, tolerance, pass).
    fn conditions(&self) -> Vec<(String, f64, f64, bool)> {
        self.inner
            .conditions
            .iter()
            .map(|c| (c.name.clone(), c.residual, c.tolerance, c.pass))
            .collect()
    }

    fn csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "Validation(subject='{}', order={}, verdict={})",
            self.inner.subject_id,
            self.inner.order,
            self.inner.verdict()
        )
    }

    fn __str__(&self) -> String {
        format!("{}", self.inner)
    }
}

type RowTuple = (f64, Option<f64>, Option<f64>, Option<f64>, bool);

/// Tabulated h-sweep.
#[pyclass(frozen, module = "difint_py")]
struct Sweep {
    inner: differentiator::SweepResult,
}

#[pymethods]
impl Sweep {
    #[getter]
    fn kernel(&self) -> String {
        self.inner.kernel_id.clone()
    }

    #[getter]
    fn order(&self) -> u32 {
        self.inner.order
    }

    #[getter]
    fn x0(&self) -> f64 {
        self.inner.x0
    }

    #[getter]
    fn reference(&self) -> Option<f64> {
        self.inner.reference
    }

    #[getter]
    fn observed_order(&self) -> Option<f64> {
        self.inner.observed_order
    }

    /// Rows as (h, estimate, abs_error, quad_error, converged).
    fn rows(&self) -> Vec<RowTuple> {
        self.inner
            .rows
            .iter()
            .map(|r| (r.h, r.value, r.abs_error, r.quad_error, r.converged))
            .collect()
    }

    fn csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __repr__(&self) -> String {
        format!(
            "Sweep(kernel='{}', order={}, rows={})",
            self.inner.kernel_id,
            self.inner.order,
            self.inner.rows.len()
        )
    }
}

/// Fabius function value at x.
#[pyfunction]
fn fabius_eval(x: f64) -> PyResult<f64> {
    fabius::default_table().eval(x).map_err(value_err)
}

/// m-th derivative of the Fabius function at x.
#[pyfunction]
#[pyo3(signature = (x, m=1))]
fn fabius_derivative(x: f64, m: u32) -> PyResult<f64> {
    fabius::default_table()
        .eval_derivative(x, m)
        .map_err(value_err)
}

/// Kernel registry summary: list of (id pattern, description).
#[pyfunction]
fn list_kernels() -> Vec<(String, String)> {
    kernels::registry_summary()
}

/// Evaluate a registry kernel at t.
#[pyfunction]
fn kernel_eval(id: &str, t: f64) -> PyResult<f64> {
    Ok(resolve_kernel(id)?.eval(t))
}

/// Derivative order a registry kernel targets.
#[pyfunction]
fn kernel_order(id: &str) -> PyResult<u32> {
    Ok(resolve_kernel(id)?.order())
}

/// Adaptive integral of f over [a, b]; returns (value, error_estimate, evaluations).
#[pyfunction]
#[pyo3(signature = (f, a, b, abs_tol=1e-12))]
fn integrate(f: &Bound<'_, PyAny>, a: f64, b: f64, abs_tol: f64) -> PyResult<(f64, f64, u64)> {
    let target = Target::resolve(f)?;
    let result = target.with(|g| {
        quadrature::integrate(g, a, b, abs_tol, quadrature::DEFAULT_MAX_SUBDIV)
    })?;
    let r = result.map_err(runtime_err)?;
    Ok((r.value, r.error_estimate, r.evaluations))
}

/// Two-point central difference.
#[pyfunction]
fn central_difference(f: &Bound<'_, PyAny>, x0: f64, h: f64) -> PyResult<f64> {
    let target = Target::resolve(f)?;
    target.with(|g| differentiator::central_difference(g, x0, h))
}

/// n-th derivative estimate of f at x0 with half-width h.
#[pyfunction]
#[pyo3(signature = (f, x0, h, kernel="lanczos", n=None, quad_tol=1e-10))]
fn estimate(
    f: &Bound<'_, PyAny>,
    x0: f64,
    h: f64,
    kernel: &str,
    n: Option<u32>,
    quad_tol: f64,
) -> PyResult<Estimate> {
    let target = Target::resolve(f)?;
    match resolve_entry(kernel)? {
        RegistryEntry::Kernel(k) => {
            let n = n.unwrap_or_else(|| k.order());
            let result =
                target.with(|g| differentiator::estimate(g, x0, n, h, &k, quad_tol))?;
            match result {
                Ok(est) => Ok(est.into()),
                Err(DifferentiatorError::NonConvergence(est)) => {
                    let mut py_est: Estimate = (*est).into();
                    py_est.converged = false;
                    Ok(py_est)
                }
                Err(e @ DifferentiatorError::OrderMismatch { .. })
                | Err(e @ DifferentiatorError::InvalidStep(_)) => Err(value_err(e)),
                Err(e) => Err(runtime_err(e)),
            }
        }
        RegistryEntry::BoundaryWeight(w) => {
            if n.unwrap_or(1) != 1 {
                return Err(PyValueError::new_err(
                    "the boundary-term path only supports order 1",
                ));
            }
            let result = target.with(|g| {
                differentiator::first_derivative_from_weight(g, x0, h, &w, quad_tol)
            })?;
            result.map(Into::into).map_err(value_err)
        }
    }
}

/// Estimate across strictly decreasing h values.
#[pyfunction]
#[pyo3(signature = (f, x0, h_values, kernel="lanczos", n=None, reference=None, quad_tol=1e-10))]
fn sweep(
    f: &Bound<'_, PyAny>,
    x0: f64,
    h_values: Vec<f64>,
    kernel: &str,
    n: Option<u32>,
    reference: Option<f64>,
    quad_tol: f64,
) -> PyResult<Sweep> {
    let target = Target::resolve(f)?;
    let k = resolve_kernel(kernel)?;
    let n = n.unwrap_or_else(|| k.order());
    let result = target.with(|g| {
        differentiator::sweep(g, x0, n, &k, &h_values, reference, quad_tol)
    })?;
    result
        .map(|inner| Sweep { inner })
        .map_err(value_err)
}

/// Validate a registry kernel against the order-n conditions.
#[pyfunction]
#[pyo3(signature = (id, tol=1e-9, grid_size=4097))]
fn validate_kernel(id: &str, tol: f64, grid_size: usize) -> PyResult<Validation> {
    let k = match resolve_entry(id)? {
        RegistryEntry::Kernel(k) => k,
        RegistryEntry::BoundaryWeight(w) => {
            let eval = w.eval_fn();
            KernelSpec::direct(w.id(), 1, move |t| eval(t))
        }
    };
    validator::validate_kernel(&k, tol, grid_size)
        .map(|inner| Validation { inner })
        .map_err(runtime_err)
}

/// Validate a built-in weight (lanczos, constant, bump, fabius) at order n.
#[pyfunction]
#[pyo3(signature = (id, n, tol=1e-9))]
fn validate_weight(id: &str, n: u32, tol: f64) -> PyResult<Validation> {
    let w = match id {
        "lanczos" => kernels::lanczos_weight(),
        "constant" => kernels::constant_weight(),
        "bump" => kernels::bump_weight(),
        "fabius" => kernels::fabius_weight(),
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown weight `{id}` (expected lanczos, constant, bump, fabius)"
            )))
        }
    };
    Ok(Validation {
        inner: validator::validate_weight(&w, n, tol),
    })
}

#[pymodule]
fn difint_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Estimate>()?;
    m.add_class::<Validation>()?;
    m.add_class::<Sweep>()?;
    m.add_function(wrap_pyfunction!(fabius_eval, m)?)?;
    m.add_function(wrap_pyfunction!(fabius_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(list_kernels, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_eval, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_order, m)?)?;
    m.add_function(wrap_pyfunction!(integrate, m)?)?;
    m.add_function(wrap_pyfunction!(central_difference, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(validate_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(validate_weight, m)?)?;
    Ok(())
}
