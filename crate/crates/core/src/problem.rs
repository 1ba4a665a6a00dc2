//! Problem data for the Cauchy problem
//!
//! ```text
//! u_xx + u_yy + k² η(x,y) u = S(x,y)   on [a,b] × [0,1]
//! u_y(x,0) = f(x),  u(x,0) = g(x)
//! ```
//!
//! Fields are plain closures sampled on demand. The two analytic benchmark
//! cases are available through [`example1`] and [`example2`].

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Scalar field on the rectangle.
pub type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// Function of `x` along the data line `y = 0`.
pub type Field1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The rectangle `[a, b] × [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectDomain {
    a: f64,
    b: f64,
}

impl RectDomain {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidDomain { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }
}

/// Closed-form solution attached to a benchmark case.
#[derive(Clone)]
pub struct ExactSolution {
    value: Field2,
    /// Analytic `∂u/∂y`, used by [`verify_compatibility`] when present.
    dy: Option<Field2>,
}

impl ExactSolution {
    pub fn new(value: Field2, dy: Option<Field2>) -> Self {
        Self { value, dy }
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        (self.value)(x, y)
    }

    /// `∂u/∂y`, analytic when available, otherwise a centered difference
    /// with step `1e-6`.
    pub fn dy(&self, x: f64, y: f64) -> f64 {
        match &self.dy {
            Some(d) => d(x, y),
            None => {
                let h = 1e-6;
                ((self.value)(x, y + h) - (self.value)(x, y - h)) / (2.0 * h)
            }
        }
    }
}

/// Data `(k, η, S, f, g)` of a Cauchy problem, plus the exact solution for
/// analytic cases.
#[derive(Clone)]
pub struct CauchyCase {
    name: String,
    domain: RectDomain,
    k: f64,
    eta: Field2,
    source: Field2,
    neumann: Field1,
    dirichlet: Field1,
    exact: Option<ExactSolution>,
}

impl fmt::Debug for CauchyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CauchyCase")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("k", &self.k)
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl CauchyCase {
    /// Builds a custom case. `k = 0` is accepted (pure Poisson operator).
    pub fn new(
        name: impl Into<String>,
        domain: RectDomain,
        k: f64,
        eta: Field2,
        source: Field2,
        neumann: Field1,
        dirichlet: Field1,
    ) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(invalid("k", format!("wave number must be finite and >= 0, got {k}")));
        }
        Ok(Self {
            name: name.into(),
            domain,
            k,
            eta,
            source,
            neumann,
            dirichlet,
            exact: None,
        })
    }

    pub fn with_exact(mut self, exact: ExactSolution) -> Self {
        self.exact = Some(exact);
        self
    }

    pub fn with_dirichlet(mut self, dirichlet: Field1) -> Self {
        self.dirichlet = dirichlet;
        self
    }

    pub fn with_neumann(mut self, neumann: Field1) -> Self {
        self.neumann = neumann;
        self
    }

    pub fn with_k(mut self, k: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0) {
            return Err(invalid("k", format!("wave number must be finite and >= 0, got {k}")));
        }
        self.k = k;
        Ok(self)
    }

    /// Looks up a shipped case by name (`example1`, `example2`).
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "example1" => Some(example1()),
            "example2" => Some(example2()),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> RectDomain {
        self.domain
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eta(&self, x: f64, y: f64) -> f64 {
        (self.eta)(x, y)
    }

    pub fn source(&self, x: f64, y: f64) -> f64 {
        (self.source)(x, y)
    }

    pub fn neumann(&self, x: f64) -> f64 {
        (self.neumann)(x)
    }

    pub fn dirichlet(&self, x: f64) -> f64 {
        (self.dirichlet)(x)
    }

    pub fn exact(&self) -> Option<&ExactSolution> {
        self.exact.as_ref()
    }

    pub(crate) fn require_exact(&self) -> Result<&ExactSolution> {
        self.exact
            .as_ref()
            .ok_or_else(|| Error::MissingExact(self.name.clone()))
    }
}

/// Refraction index of the first benchmark: a cone of height 2 over an
/// ellipse centred at `(0, 1/2)`, and 1 outside.
fn eta_example1(x: f64, y: f64) -> f64 {
    let e = x * x + (2.0 * y - 1.0).powi(2) / 0.64;
    if e <= 1.0 {
        2.0 - e.sqrt()
    } else {
        1.0
    }
}

/// First benchmark: `[a,b] = [-1,1]`, `k = 3`, piecewise refraction index,
/// `u = (x - 2y + 1) sin(k/√2 (x + 2y - 1))`.
pub fn example1() -> CauchyCase {
    let k = 3.0;
    let w = k / SQRT_2;
    let u = move |x: f64, y: f64| (x - 2.0 * y + 1.0) * (w * (x + 2.0 * y - 1.0)).sin();
    let u_y = move |x: f64, y: f64| {
        let theta = w * (x + 2.0 * y - 1.0);
        -2.0 * theta.sin() + 2.0 * w * (x - 2.0 * y + 1.0) * theta.cos()
    };
    // Verbatim from the published source term, including the k²ηu correction.
    let source = move |x: f64, y: f64| {
        let theta = w * (x + 2.0 * y - 1.0);
        -2.5 * k * k * (x - 2.0 * y + 1.0) * theta.sin() - 3.0 * k * SQRT_2 * theta.cos()
            + k * k * eta_example1(x, y) * u(x, y)
    };
    let f = move |x: f64| {
        k * SQRT_2 * (x + 1.0) * (w * (x - 1.0)).cos() - 2.0 * (w * (x - 1.0)).sin()
    };
    let g = move |x: f64| (x + 1.0) * (w * (x - 1.0)).sin();

    CauchyCase {
        name: "example1".into(),
        domain: RectDomain { a: -1.0, b: 1.0 },
        k,
        eta: Arc::new(eta_example1),
        source: Arc::new(source),
        neumann: Arc::new(f),
        dirichlet: Arc::new(g),
        exact: Some(ExactSolution::new(Arc::new(u), Some(Arc::new(u_y)))),
    }
}

/// Second benchmark: `[a,b] = [-1.5,1.5]`, `k = 1`, `η = 1 + y²`,
/// `u = 4(1+y)/√(2π) · exp(-8x²)`.
pub fn example2() -> CauchyCase {
    let c = 4.0 / (2.0 * PI).sqrt();
    let profile = move |x: f64| c * (-8.0 * x * x).exp();
    let u = move |x: f64, y: f64| (1.0 + y) * profile(x);
    let u_y = move |x: f64, _y: f64| profile(x);
    let source = move |x: f64, y: f64| (1.0 + y) * profile(x) * (256.0 * x * x - 15.0 + y * y);

    CauchyCase {
        name: "example2".into(),
        domain: RectDomain { a: -1.5, b: 1.5 },
        k: 1.0,
        eta: Arc::new(|_x: f64, y: f64| 1.0 + y * y),
        source: Arc::new(source),
        neumann: Arc::new(profile),
        dirichlet: Arc::new(profile),
        exact: Some(ExactSolution::new(Arc::new(u), Some(Arc::new(u_y)))),
    }
}

/// Largest mismatch between the boundary data and the exact solution over
/// `n_probe` equispaced points of `[a, b]`: `max |g - u(·,0)|, |f - u_y(·,0)|`.
pub fn verify_compatibility(case: &CauchyCase, n_probe: usize) -> Result<f64> {
    let exact = case.require_exact()?;
    if n_probe < 2 {
        return Err(invalid("n_probe", "need at least 2 probe points"));
    }
    let d = case.domain();
    let step = d.width() / (n_probe - 1) as f64;
    let mut worst = 0.0_f64;
    for i in 0..n_probe {
        let x = d.a() + i as f64 * step;
        let dirichlet = (case.dirichlet(x) - exact.value(x, 0.0)).abs();
        let neumann = (case.neumann(x) - exact.dy(x, 0.0)).abs();
        worst = worst.max(dirichlet).max(neumann);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_refraction_index() {
        let case = example1();
        assert_eq!(case.eta(0.0, 0.5), 2.0);
        assert_eq!(case.eta(0.0, 0.0), 1.0);
        // continuity across the ellipse: e -> 1 gives η -> 1
        let y = 0.5 + 0.4 * (1.0 - 1e-12_f64).sqrt();
        assert!((case.eta(0.0, y) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn example1_eta_range() {
        let case = example1();
        for i in 0..=60 {
            for j in 0..=60 {
                let x = -1.0 + 2.0 * i as f64 / 60.0;
                let y = j as f64 / 60.0;
                let eta = case.eta(x, y);
                assert!((1.0..=2.0).contains(&eta), "eta({x},{y}) = {eta}");
            }
        }
    }

    #[test]
    fn example1_boundary_data() {
        let case = example1();
        assert_eq!(case.dirichlet(1.0), 0.0);
        // 30-digit oracle: sin(-3/sqrt(2)) = -0.852250508152489...
        assert!((case.dirichlet(0.0) - (-0.852_250_508_152_489)).abs() < 1e-12);
    }

    #[test]
    fn example2_values() {
        let case = example2();
        let u = case.exact().unwrap();
        assert!((u.value(0.0, 0.0) - 1.595_769_121_605_730_7).abs() < 1e-12);
        assert!((u.value(0.0, 1.0) - 3.191_538_243_211_461).abs() < 1e-12);
        assert_eq!(u.value(0.0, 1.0), 2.0 * u.value(0.0, 0.0));
        assert!((case.source(0.0, 0.0) - (-23.936_536_824_085_96)).abs() < 1e-10);
    }

    #[test]
    fn example2_separable_in_y() {
        let case = example2();
        let u = case.exact().unwrap();
        for i in 0..=30 {
            for j in 0..=20 {
                let x = -1.5 + 3.0 * i as f64 / 30.0;
                let y = j as f64 / 20.0;
                assert!((u.value(x, y) - (1.0 + y) * case.dirichlet(x)).abs() < 1e-12);
            }
        }
    }

    /// Cross-checks the transcribed source terms against Δu + k²ηu computed
    /// by a fourth-order difference stencil of the exact solution.
    #[test]
    fn source_matches_operator_applied_to_exact() {
        for case in [example1(), example2()] {
            let u = case.exact().unwrap().clone();
            let h = 1e-3;
            let lap = |x: f64, y: f64| {
                let d2 = |f: &dyn Fn(f64) -> f64| {
                    (-f(2.0 * h) + 16.0 * f(h) - 30.0 * f(0.0) + 16.0 * f(-h) - f(-2.0 * h))
                        / (12.0 * h * h)
                };
                d2(&|t| u.value(x + t, y)) + d2(&|t| u.value(x, y + t))
            };
            let d = case.domain();
            for i in 1..10 {
                for j in 1..10 {
                    let x = d.a() + d.width() * i as f64 / 10.0;
                    let y = j as f64 / 10.0;
                    let op = lap(x, y) + case.k().powi(2) * case.eta(x, y) * u.value(x, y);
                    let s = case.source(x, y);
                    assert!((op - s).abs() < 1e-3, "{}: S({x},{y}) = {s}, operator gives {op}", case.name());
                }
            }
        }
    }

    #[test]
    fn compatibility_of_shipped_examples() {
        assert!(verify_compatibility(&example2(), 101).unwrap() < 1e-9);
        assert!(verify_compatibility(&example1(), 101).unwrap() <= 1e-6);
    }

    #[test]
    fn compatibility_detects_mismatch() {
        let broken = example1().with_dirichlet(Arc::new(|x| {
            (x + 1.0) * (3.0 / SQRT_2 * (x - 1.0)).sin() + 1.0
        }));
        assert!(verify_compatibility(&broken, 101).unwrap() >= 1.0);
    }

    #[test]
    fn compatibility_falls_back_to_finite_difference() {
        let case = example2();
        let u = case.exact().unwrap();
        let value = u.value.clone();
        let no_dy = case.clone().with_exact(ExactSolution::new(value, None));
        assert!(verify_compatibility(&no_dy, 101).unwrap() < 1e-8);
    }

    #[test]
    fn missing_exact_is_an_error() {
        let d = RectDomain::new(0.0, 1.0).unwrap();
        let zero2: Field2 = Arc::new(|_, _| 0.0);
        let zero1: Field1 = Arc::new(|_| 0.0);
        let case = CauchyCase::new("plain", d, 1.0, Arc::new(|_, _| 1.0), zero2, zero1.clone(), zero1).unwrap();
        assert!(matches!(verify_compatibility(&case, 11), Err(Error::MissingExact(_))));
    }

    #[test]
    fn rejects_bad_domain_and_k() {
        assert!(RectDomain::new(1.0, 1.0).is_err());
        assert!(RectDomain::new(2.0, 1.0).is_err());
        assert!(example2().with_k(-1.0).is_err());
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(CauchyCase::by_name("example1").unwrap().k(), 3.0);
        assert_eq!(CauchyCase::by_name("example2").unwrap().k(), 1.0);
        assert!(CauchyCase::by_name("example3").is_none());
    }
}
