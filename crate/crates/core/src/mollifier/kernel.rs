use std::f64::consts::PI;

use crate::error::{invalid, Result};

/// Number of unit directions sampled by [`GaussianKernel::lemma_bounds`].
pub const LEMMA_DIRECTIONS: usize = 360;

/// Isotropic Gaussian mollifier `φ_α(x) = exp(-|x|²/2α²) / (2πα²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianKernel {
    alpha: f64,
}

impl GaussianKernel {
    /// `alpha` must lie in `(0, 1]`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(invalid("alpha", format!("{alpha} is outside (0, 1]")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn exponent(&self, xi_sq: f64) -> f64 {
        2.0 * PI * PI * self.alpha * self.alpha * xi_sq
    }

    /// Fourier transform `φ̂_α(ξ) = exp(-2π²α²|ξ|²)` under the convention
    /// `φ̂(ξ) = ∫ φ(x) e^{-2πi⟨x, ξ⟩} dx`.
    pub fn symbol(&self, xi: [f64; 2]) -> f64 {
        (-self.exponent(xi[0] * xi[0] + xi[1] * xi[1])).exp()
    }

    /// `1 - φ̂_α(ξ)` without cancellation for small `α|ξ|`.
    pub fn one_minus_symbol(&self, xi: [f64; 2]) -> f64 {
        -(-self.exponent(xi[0] * xi[0] + xi[1] * xi[1])).exp_m1()
    }

    /// `(1 - φ̂_α(ξ)) / (2π²α²|ξ|²)`, which tends to 1 as `α|ξ| → 0`
    /// (the kernel is a Lévy kernel of order `s = 2`).
    pub fn asymptote_ratio(&self, xi: [f64; 2]) -> f64 {
        let t = self.exponent(xi[0] * xi[0] + xi[1] * xi[1]);
        if t == 0.0 {
            1.0
        } else {
            -(-t).exp_m1() / t
        }
    }

    /// Closed form `(1 - exp(-2π²α²))²` of both bounds.
    pub fn lemma_closed_form(&self) -> f64 {
        let v = -(-self.exponent(1.0)).exp_m1();
        v * v
    }

    /// `(m_α, M_α)`: min and max of `|1 - φ̂_α(ξ)|²` over the unit circle,
    /// sampled at [`LEMMA_DIRECTIONS`] directions.
    pub fn lemma_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..LEMMA_DIRECTIONS {
            let theta = 2.0 * PI * i as f64 / LEMMA_DIRECTIONS as f64;
            let v = self.one_minus_symbol([theta.cos(), theta.sin()]);
            lo = lo.min(v * v);
            hi = hi.max(v * v);
        }
        (lo, hi)
    }

    /// Half-width in nodes of the stencil on an axis with spacing `h`:
    /// `ceil(4α / h)`, or 0 once `α < h/8` (all mass on the centre node).
    pub fn radius(&self, h: f64) -> usize {
        if self.alpha < h / 8.0 {
            0
        } else {
            // guard against 4α/h landing a rounding error above an integer
            (4.0 * self.alpha / h - 1e-9).ceil() as usize
        }
    }

    /// Unnormalized 1D weights `exp(-(i h)²/2α²)` for `i = -r..=r`.
    pub fn weights(&self, h: f64) -> Vec<f64> {
        let r = self.radius(h) as isize;
        (-r..=r)
            .map(|i| {
                let d = i as f64 * h / self.alpha;
                (-0.5 * d * d).exp()
            })
            .collect()
    }
}
