//! Discrete Gaussian convolution on the extended grid.
//!
//! The stencil is truncated per axis at `4α` (a square support, so that
//! `C = C_y ⊗ C_x`) and every row is renormalized to unit mass. Rows near the
//! ends of the extended grid renormalize over the nodes that exist instead of
//! padding with zeros.

use faer::Mat;

use super::extension::ExtendedGrid;
use super::kernel::GaussianKernel;
use super::kron::kron_apply;
use crate::error::{check_len, Error, Result};

/// 1D convolution matrix on `m` nodes of spacing `h`.
pub fn axis_convolution(kernel: &GaussianKernel, m: usize, h: f64) -> Mat<f64> {
    let w = kernel.weights(h);
    let r = kernel.radius(h);
    let mut c = Mat::zeros(m, m);
    for i in 0..m {
        let lo = i.saturating_sub(r);
        let hi = (i + r).min(m - 1);
        let mass: f64 = (lo..=hi).map(|k| w[k + r - i]).sum();
        for k in lo..=hi {
            c[(i, k)] = w[k + r - i] / mass;
        }
    }
    c
}

/// `C = C_y ⊗ C_x` on the extended grid.
#[derive(Debug, Clone)]
pub struct Convolution {
    kernel: GaussianKernel,
    egrid: ExtendedGrid,
    x: Mat<f64>,
    y: Mat<f64>,
    radius: (usize, usize),
}

impl Convolution {
    pub fn kernel(&self) -> &GaussianKernel {
        &self.kernel
    }

    pub fn x_factor(&self) -> &Mat<f64> {
        &self.x
    }

    pub fn y_factor(&self) -> &Mat<f64> {
        &self.y
    }

    /// Stencil half-widths `(r_x, r_y)` in nodes.
    pub fn radius(&self) -> (usize, usize) {
        self.radius
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("extended-grid vector", self.egrid.len(), v.len())?;
        Ok(kron_apply(self.y.as_ref(), self.x.as_ref(), v))
    }
}

/// Fails if the stencil reaches further than the ghost band.
pub fn build_convolution(kernel: &GaussianKernel, egrid: &ExtendedGrid) -> Result<Convolution> {
    let base = egrid.base();
    let radius = (kernel.radius(base.dx()), kernel.radius(base.dy()));
    let widest = radius.0.max(radius.1);
    if widest > egrid.ghost() {
        return Err(Error::KernelTooWide {
            radius: widest,
            ghost: egrid.ghost(),
        });
    }
    Ok(Convolution {
        kernel: *kernel,
        egrid: *egrid,
        x: axis_convolution(kernel, egrid.nx(), base.dx()),
        y: axis_convolution(kernel, egrid.ny(), base.dy()),
        radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use crate::problem::RectDomain;

    fn egrid() -> ExtendedGrid {
        let g = Grid2D::new(RectDomain::new(-1.0, 1.0).unwrap(), 21, 21).unwrap();
        ExtendedGrid::new(g, 4, 0).unwrap()
    }

    #[test]
    fn rows_have_unit_mass() {
        let eg = egrid();
        let c = build_convolution(&GaussianKernel::new(0.04).unwrap(), &eg).unwrap();
        for f in [c.x_factor(), c.y_factor()] {
            for i in 0..f.nrows() {
                let s: f64 = (0..f.ncols()).map(|k| f[(i, k)]).sum();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
        let ones = c.apply(&vec![1.0; eg.len()]).unwrap();
        assert!(ones.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn narrow_kernel_is_identity() {
        let eg = egrid();
        let c = build_convolution(&GaussianKernel::new(0.005).unwrap(), &eg).unwrap();
        assert_eq!(c.radius(), (0, 0));
        let v: Vec<f64> = (0..eg.len()).map(|i| i as f64).collect();
        assert_eq!(c.apply(&v).unwrap(), v);
    }

    #[test]
    fn odd_moments_cancel_away_from_edges() {
        let eg = egrid();
        let c = build_convolution(&GaussianKernel::new(0.05).unwrap(), &eg).unwrap();
        let (rx, ry) = c.radius();
        let v: Vec<f64> = (0..eg.len()).map(|i| eg.x(i % eg.nx())).collect();
        let w = c.apply(&v).unwrap();
        for n in ry..eg.ny() - ry {
            for j in rx..eg.nx() - rx {
                let i = n * eg.nx() + j;
                assert!((w[i] - v[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_wide_kernel() {
        let eg = egrid();
        let err = build_convolution(&GaussianKernel::new(0.5).unwrap(), &eg).unwrap_err();
        assert!(matches!(err, Error::KernelTooWide { ghost: 4, .. }));
    }
}
