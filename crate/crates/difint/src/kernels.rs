//! Built-in weight and kernel functions for differentiation by integration.
//!
//! A weight `w` on [-1, 1] is valid at order `n` when `w^(k)(-1) = w^(k)(1) = 0`
//! for `k = 0..n-1` and its integral is 1; the matching kernel is `w^(n)`.
//! Provided families:
//!
//! * the classic parabolic weight `w(t) = (3/4)(1 - t^2)` and its kernel `-(3/2) t`,
//! * the constant weight `w = 0.5` (central-difference limit, boundary-term path),
//! * Legendre kernels `k_n = ((-1)^n / 2) (2n+1)!! P_n`,
//! * exponential bump weights `(1/K) exp(1/(t^2-1))` with kernels for any order
//!   generated by an exact integer-coefficient prefactor recurrence,
//! * shifted Fabius weights, universal across all derivative orders.

use std::sync::Arc;

use crate::fabius::{self, FabiusTable};

/// Shared shape of weight/kernel evaluators.
pub type EvalFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Normalization constant of the exponential bump: the integral of
/// `exp(1/(t^2-1))` over [-1, 1].
pub const BUMP_NORMALIZATION: f64 = 0.4439938161680786;

/// Largest bump-kernel order accepted through the registry. The prefactor
/// recurrence stays within exact i128 arithmetic well past this.
pub const MAX_BUMP_ORDER: u32 = 16;
/// Largest Legendre-kernel order accepted through the registry.
pub const MAX_LEGENDRE_ORDER: u32 = 64;

#[derive(Debug, Clone, thiserror::Error)]
pub enum KernelError {
    #[error("order {order} unsupported for {family}: {reason}")]
    UnsupportedOrder {
        family: &'static str,
        order: u32,
        reason: String,
    },
    #[error("unknown kernel id `{0}`")]
    UnknownId(String),
    #[error("bump prefactor coefficients overflow exact integer range at order {order}")]
    PrefactorOverflow { order: u32 },
}

/// How many derivative orders a weight can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxDerivOrder {
    Bounded(u32),
    Unbounded,
}

impl MaxDerivOrder {
    pub fn supports(&self, k: u32) -> bool {
        match self {
            MaxDerivOrder::Bounded(m) => k <= *m,
            MaxDerivOrder::Unbounded => true,
        }
    }
}

/// A weight function on [-1, 1] together with its available derivatives.
#[derive(Clone)]
pub struct WeightSpec {
    id: String,
    max_deriv_order: MaxDerivOrder,
    endpoint_limit: bool,
    eval: EvalFn,
    deriv: Arc<dyn Fn(u32) -> Option<EvalFn> + Send + Sync>,
}

impl WeightSpec {
    pub fn new(
        id: impl Into<String>,
        eval: EvalFn,
        deriv: Arc<dyn Fn(u32) -> Option<EvalFn> + Send + Sync>,
        max_deriv_order: MaxDerivOrder,
        endpoint_limit: bool,
    ) -> Self {
        WeightSpec {
            id: id.into(),
            max_deriv_order,
            endpoint_limit,
            eval,
            deriv,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn max_deriv_order(&self) -> MaxDerivOrder {
        self.max_deriv_order
    }

    /// True when derivatives at the endpoints exist only as continuous
    /// extensions (the weight is non-analytic at -1 and 1).
    pub fn endpoint_limit(&self) -> bool {
        self.endpoint_limit
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn eval_fn(&self) -> EvalFn {
        Arc::clone(&self.eval)
    }

    /// k-th derivative as a callable; `k = 0` returns the weight itself.
    /// `None` when the order is not available.
    pub fn derivative(&self, k: u32) -> Option<EvalFn> {
        if k == 0 {
            return Some(self.eval_fn());
        }
        if !self.max_deriv_order.supports(k) {
            return None;
        }
        (self.deriv)(k)
    }
}

impl std::fmt::Debug for WeightSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightSpec")
            .field("id", &self.id)
            .field("max_deriv_order", &self.max_deriv_order)
            .field("endpoint_limit", &self.endpoint_limit)
            .finish()
    }
}

/// Where a kernel comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// The kernel is the n-th derivative of a valid weight.
    DerivativeOfWeight,
    /// Supplied directly as a callable with a claimed order.
    Direct,
}

/// A kernel function targeted at one derivative order, used directly inside
/// the differentiation-by-integration integral.
#[derive(Clone)]
pub struct KernelSpec {
    id: String,
    order: u32,
    provenance: Provenance,
    eval: EvalFn,
}

impl KernelSpec {
    /// Wrap a user-supplied callable with a claimed order (validate it!).
    pub fn direct(id: impl Into<String>, order: u32, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        assert!(order >= 1, "kernel order must be >= 1");
        KernelSpec {
            id: id.into(),
            order,
            provenance: Provenance::Direct,
            eval: Arc::new(f),
        }
    }

    fn from_weight_derivative(id: impl Into<String>, order: u32, eval: EvalFn) -> Self {
        KernelSpec {
            id: id.into(),
            order,
            provenance: Provenance::DerivativeOfWeight,
            eval,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }

    pub fn eval_fn(&self) -> EvalFn {
        Arc::clone(&self.eval)
    }

    /// Same kernel rescaled by a constant factor.
    pub fn scaled(&self, factor: f64, id: impl Into<String>) -> KernelSpec {
        let inner = self.eval_fn();
        KernelSpec {
            id: id.into(),
            order: self.order,
            provenance: self.provenance,
            eval: Arc::new(move |t| factor * inner(t)),
        }
    }
}

impl std::fmt::Debug for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KernelSpec")
            .field("id", &self.id)
            .field("order", &self.order)
            .field("provenance", &self.provenance)
            .finish()
    }
}

/// Kernel formed from the n-th derivative of a weight, when available.
pub fn kernel_from_weight(w: &WeightSpec, n: u32) -> Option<KernelSpec> {
    if n == 0 {
        return None;
    }
    let eval = w.derivative(n)?;
    Some(KernelSpec::from_weight_derivative(
        format!("{}[d{}]", w.id(), n),
        n,
        eval,
    ))
}

// ---------------------------------------------------------------------------
// Classic weights
// ---------------------------------------------------------------------------

/// The parabolic weight `w(t) = (3/4)(1 - t^2)`, valid at order 1.
pub fn lanczos_weight() -> WeightSpec {
    WeightSpec::new(
        "lanczos",
        Arc::new(|t| 0.75 * (1.0 - t * t)),
        Arc::new(|k| {
            let f: EvalFn = match k {
                1 => Arc::new(|t| -1.5 * t),
                2 => Arc::new(|_| -1.5),
                _ => Arc::new(|_| 0.0),
            };
            Some(f)
        }),
        MaxDerivOrder::Unbounded,
        false,
    )
}

/// The order-1 kernel of [`lanczos_weight`]: `k(t) = -(3/2) t`.
pub fn lanczos_kernel() -> KernelSpec {
    KernelSpec::from_weight_derivative("lanczos", 1, Arc::new(|t| -1.5 * t))
}

/// The constant weight `w(t) = 0.5`, which recovers the two-point central
/// difference through the boundary term of integration by parts. Not a valid
/// differentiation-by-integration weight (its endpoint values do not vanish).
pub fn constant_weight() -> WeightSpec {
    WeightSpec::new(
        "constant",
        Arc::new(|_| 0.5),
        Arc::new(|_| {
            let zero: EvalFn = Arc::new(|_| 0.0);
            Some(zero)
        }),
        MaxDerivOrder::Unbounded,
        false,
    )
}

// ---------------------------------------------------------------------------
// Legendre kernels
// ---------------------------------------------------------------------------

/// Legendre polynomial `P_n(x)` by the stable three-term recurrence
/// `(k+1) P_{k+1} = (2k+1) x P_k - k P_{k-1}`.
pub fn legendre_polynomial(n: u32, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0;
    let mut curr = x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0) * x * curr - kf * prev) / (kf + 1.0);
        prev = curr;
        curr = next;
    }
    curr
}

/// Odd double factorial `(2n+1)!!`, exact in integer arithmetic while it
/// fits, with a flagged floating-point fallback past that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DoubleFactorial {
    Exact(u128),
    Approximate(f64),
}

impl DoubleFactorial {
    pub fn as_f64(&self) -> f64 {
        match self {
            DoubleFactorial::Exact(v) => *v as f64,
            DoubleFactorial::Approximate(v) => *v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, DoubleFactorial::Exact(_))
    }
}

pub fn odd_double_factorial(n: u32) -> DoubleFactorial {
    let mut acc: u128 = 1;
    for j in 0..=n {
        let factor = (2 * j + 1) as u128;
        match acc.checked_mul(factor) {
            Some(next) => acc = next,
            None => {
                let mut approx = acc as f64;
                for jj in j..=n {
                    approx *= (2 * jj + 1) as f64;
                }
                return DoubleFactorial::Approximate(approx);
            }
        }
    }
    DoubleFactorial::Exact(acc)
}

/// Legendre kernel of order n: `k_n(x) = ((-1)^n / 2) (2n+1)!! P_n(x)`.
pub fn legendre_kernel(n: u32) -> KernelSpec {
    assert!(n >= 1, "kernel order must be >= 1");
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let coeff = sign * 0.5 * odd_double_factorial(n).as_f64();
    KernelSpec::from_weight_derivative(
        format!("legendre:{n}"),
        n,
        Arc::new(move |x| coeff * legendre_polynomial(n, x)),
    )
}

// ---------------------------------------------------------------------------
// Exponential bump family
// ---------------------------------------------------------------------------

/// Polynomial numerator `Q_n` of the n-th bump-weight derivative:
/// `w^(n)(t) = (1/K) Q_n(t) (t^2-1)^(-2n) exp(1/(t^2-1))`, with the recurrence
/// `Q_{n+1} = (t^2-1)^2 Q_n' - (4 n t (t^2-1) + 2 t) Q_n` and `Q_0 = 1`.
/// Coefficients are exact integers for every order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BumpPrefactor {
    order: u32,
    coefficients: Vec<i128>,
}

impl BumpPrefactor {
    pub fn order(&self) -> u32 {
        self.order
    }

    /// Coefficients by ascending power of t.
    pub fn coefficients(&self) -> &[i128] {
        &self.coefficients
    }

    pub fn eval(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coefficients.iter().rev() {
            acc = acc * t + c as f64;
        }
        acc
    }
}

/// Compute `Q_n` exactly; fails only if coefficients outgrow i128.
pub fn bump_prefactor(n: u32) -> Result<BumpPrefactor, KernelError> {
    let mut q: Vec<i128> = vec![1];
    for m in 0..n {
        let mi = m as i128;
        let mut next = vec![0i128; q.len() + 3];
        let mut step = || -> Option<Vec<i128>> {
            for (j, &c) in q.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let ji = j as i128;
                // (t^2-1)^2 Q' contributes j*c at powers j+3, j+1 (x -2), j-1;
                // -(4 m t^3 + (2-4m) t) Q contributes at powers j+3 and j+1.
                next[j + 3] = next[j + 3].checked_add((ji - 4 * mi).checked_mul(c)?)?;
                next[j + 1] =
                    next[j + 1].checked_add((-2 * ji - 2 + 4 * mi).checked_mul(c)?)?;
                if j >= 1 {
                    next[j - 1] = next[j - 1].checked_add(ji.checked_mul(c)?)?;
                }
            }
            Some(std::mem::take(&mut next))
        };
        q = step().ok_or(KernelError::PrefactorOverflow { order: m + 1 })?;
        while q.last() == Some(&0) && q.len() > 1 {
            q.pop();
        }
    }
    Ok(BumpPrefactor {
        order: n,
        coefficients: q,
    })
}

fn bump_derivative_eval(n: u32) -> Option<EvalFn> {
    let q = bump_prefactor(n).ok()?;
    let inv_k = 1.0 / BUMP_NORMALIZATION;
    Some(Arc::new(move |t: f64| {
        if t.abs() >= 1.0 {
            return 0.0;
        }
        let u = 1.0 / (t * t - 1.0);
        // exp underflows to 0 long before the rational factor can overflow.
        if u < -700.0 {
            return 0.0;
        }
        inv_k * q.eval(t) * u.powi(2 * n as i32) * u.exp()
    }))
}

/// The normalized exponential bump weight `(1/K) exp(1/(t^2-1))`, extended by
/// 0 outside (-1, 1). Valid at every order: all derivatives vanish at the
/// endpoints, so one weight serves all n.
pub fn bump_weight() -> WeightSpec {
    let inv_k = 1.0 / BUMP_NORMALIZATION;
    WeightSpec::new(
        "bump",
        Arc::new(move |t: f64| {
            if t.abs() >= 1.0 {
                return 0.0;
            }
            let u = 1.0 / (t * t - 1.0);
            if u < -700.0 {
                return 0.0;
            }
            inv_k * u.exp()
        }),
        Arc::new(bump_derivative_eval),
        MaxDerivOrder::Unbounded,
        true,
    )
}

/// Bump kernel of order n: the n-th derivative of [`bump_weight`].
///
/// Orders far beyond [`MAX_BUMP_ORDER`] eventually overflow the exact
/// coefficient arithmetic and panic; the registry enforces the cap.
pub fn bump_kernel(n: u32) -> KernelSpec {
    assert!(n >= 1, "kernel order must be >= 1");
    let eval = bump_derivative_eval(n).expect("bump prefactor overflows exact integer range");
    KernelSpec::from_weight_derivative(format!("bump:{n}"), n, eval)
}

// ---------------------------------------------------------------------------
// Fabius family
// ---------------------------------------------------------------------------

fn fabius_supported_order(table: &FabiusTable) -> u32 {
    // Order n needs arguments up to 2^(n+1).
    let mut n = 0;
    while (2.0_f64).powi(n as i32 + 2) <= table.max_argument() {
        n += 1;
    }
    n
}

/// Shifted Fabius weight `w(t) = Fb(t + 1)` over a specific table.
pub fn fabius_weight_with(table: Arc<FabiusTable>) -> WeightSpec {
    let max_order = fabius_supported_order(&table);
    let eval_table = Arc::clone(&table);
    WeightSpec::new(
        "fabius",
        Arc::new(move |t: f64| {
            if !(-1.0..=1.0).contains(&t) {
                return 0.0;
            }
            eval_table.eval_unchecked(t + 1.0)
        }),
        Arc::new(move |k: u32| {
            if k > fabius_supported_order(&table) {
                return None;
            }
            let scale = (2.0_f64).powi((k * (k + 1) / 2) as i32);
            let pow = (2.0_f64).powi(k as i32);
            let table = Arc::clone(&table);
            let f: EvalFn = Arc::new(move |t: f64| {
                if !(-1.0..=1.0).contains(&t) {
                    return 0.0;
                }
                scale * table.eval_unchecked(pow * (t + 1.0))
            });
            Some(f)
        }),
        MaxDerivOrder::Bounded(max_order),
        true,
    )
}

/// Shifted Fabius weight over the shared default table.
pub fn fabius_weight() -> WeightSpec {
    fabius_weight_with(fabius::default_table())
}

/// Fabius kernel of order n over a specific table:
/// `k(t) = 2^(n(n+1)/2) Fb(2^n (t + 1))`.
pub fn fabius_kernel_with(table: Arc<FabiusTable>, n: u32) -> Result<KernelSpec, KernelError> {
    if n < 1 {
        return Err(KernelError::UnsupportedOrder {
            family: "fabius",
            order: n,
            reason: "kernel order must be >= 1".into(),
        });
    }
    let max_order = fabius_supported_order(&table);
    if n > max_order {
        return Err(KernelError::UnsupportedOrder {
            family: "fabius",
            order: n,
            reason: format!(
                "table supports arguments up to {}, i.e. orders up to {}",
                table.max_argument(),
                max_order
            ),
        });
    }
    let scale = (2.0_f64).powi((n * (n + 1) / 2) as i32);
    let pow = (2.0_f64).powi(n as i32);
    Ok(KernelSpec::from_weight_derivative(
        format!("fabius:{n}"),
        n,
        Arc::new(move |t: f64| {
            if !(-1.0..=1.0).contains(&t) {
                return 0.0;
            }
            scale * table.eval_unchecked(pow * (t + 1.0))
        }),
    ))
}

/// Fabius kernel of order n over the shared default table.
pub fn fabius_kernel(n: u32) -> Result<KernelSpec, KernelError> {
    fabius_kernel_with(fabius::default_table(), n)
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// What a registry id resolves to: a genuine kernel, or a weight whose
/// derivative path goes through the integration-by-parts boundary term
/// (the constant weight).
#[derive(Debug, Clone)]
pub enum RegistryEntry {
    Kernel(KernelSpec),
    BoundaryWeight(WeightSpec),
}

/// Resolve a kernel id: `lanczos`, `constant`, `legendre:<n>`, `bump:<n>`,
/// or `fabius:<n>`.
pub fn registry_lookup(id: &str) -> Result<RegistryEntry, KernelError> {
    match id {
        "lanczos" => return Ok(RegistryEntry::Kernel(lanczos_kernel())),
        "constant" => return Ok(RegistryEntry::BoundaryWeight(constant_weight())),
        _ => {}
    }
    let (family, order) = id
        .split_once(':')
        .ok_or_else(|| KernelError::UnknownId(id.to_string()))?;
    let n: u32 = order
        .parse()
        .map_err(|_| KernelError::UnknownId(id.to_string()))?;
    match family {
        "legendre" => {
            if !(1..=MAX_LEGENDRE_ORDER).contains(&n) {
                return Err(KernelError::UnsupportedOrder {
                    family: "legendre",
                    order: n,
                    reason: format!("supported orders are 1..={MAX_LEGENDRE_ORDER}"),
                });
            }
            Ok(RegistryEntry::Kernel(legendre_kernel(n)))
        }
        "bump" => {
            if !(1..=MAX_BUMP_ORDER).contains(&n) {
                return Err(KernelError::UnsupportedOrder {
                    family: "bump",
                    order: n,
                    reason: format!("supported orders are 1..={MAX_BUMP_ORDER}"),
                });
            }
            Ok(RegistryEntry::Kernel(bump_kernel(n)))
        }
        "fabius" => Ok(RegistryEntry::Kernel(fabius_kernel(n)?)),
        _ => Err(KernelError::UnknownId(id.to_string())),
    }
}

/// Human-readable registry listing for the CLI.
pub fn registry_summary() -> Vec<(String, String)> {
    let fabius_max = fabius_supported_order(&fabius::default_table());
    vec![
        ("lanczos".into(), "order 1; kernel -(3/2) t".into()),
        (
            "constant".into(),
            "order 1; constant weight 0.5, boundary-term (central difference) path".into(),
        ),
        (
            "legendre:<n>".into(),
            format!("orders 1..={MAX_LEGENDRE_ORDER}; ((-1)^n/2)(2n+1)!! P_n"),
        ),
        (
            "bump:<n>".into(),
            format!("orders 1..={MAX_BUMP_ORDER}; derivatives of (1/K) exp(1/(t^2-1))"),
        ),
        (
            "fabius:<n>".into(),
            format!("orders 1..={fabius_max}; 2^(n(n+1)/2) Fb(2^n (t+1))"),
        ),
    ]
}
