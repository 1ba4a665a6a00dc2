//! Extension of grid functions beyond the rectangle.
//!
//! A ghost node at depth `d` past an edge takes `3·u(d) - 2·u(2d)`, where
//! `u(t)` is the value at depth `t` inside the edge. The coefficients satisfy
//! `3 - 2 = 1` and `-3 + 4 = 1`, so value and first derivative match across
//! the edge and affine functions are reproduced exactly. Corners apply the
//! x-rule and then the y-rule, which makes the 2D operator the tensor product
//! `E_y ⊗ E_x` of the 1D rules.

use faer::Mat;

use super::kron::kron_apply;
use crate::error::{check_len, invalid, Error, Result};
use crate::grid::Grid2D;

/// The base grid padded with `ghost` layers on every side.
///
/// The outermost `taper_width` ghost layers are multiplied by a smoothstep
/// cutoff that falls from 1 to 0; with `taper_width = 0` there is no cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedGrid {
    base: Grid2D,
    ghost: usize,
    taper_width: usize,
}

impl ExtendedGrid {
    pub fn new(base: Grid2D, ghost: usize, taper_width: usize) -> Result<Self> {
        if ghost < 2 * taper_width {
            return Err(invalid(
                "taper_width",
                format!("{taper_width} tapered layers need at least {} ghost layers, got {ghost}", 2 * taper_width),
            ));
        }
        let shortest = base.nx().min(base.ny());
        if 2 * ghost >= shortest {
            return Err(Error::GhostBandTooDeep { ghost, len: shortest });
        }
        Ok(Self {
            base,
            ghost,
            taper_width,
        })
    }

    pub fn base(&self) -> &Grid2D {
        &self.base
    }

    pub fn ghost(&self) -> usize {
        self.ghost
    }

    pub fn taper_width(&self) -> usize {
        self.taper_width
    }

    pub fn nx(&self) -> usize {
        self.base.nx() + 2 * self.ghost
    }

    pub fn ny(&self) -> usize {
        self.base.ny() + 2 * self.ghost
    }

    pub fn len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinates of extended node `(j, n)`; they continue the base spacing.
    pub fn x(&self, j: usize) -> f64 {
        self.base.domain().a() + (j as f64 - self.ghost as f64) * self.base.dx()
    }

    pub fn y(&self, n: usize) -> f64 {
        (n as f64 - self.ghost as f64) * self.base.dy()
    }

    /// Cutoff weight of a ghost layer at depth `d ≥ 1` past the edge.
    pub fn cutoff(&self, depth: usize) -> f64 {
        let p = self.ghost;
        let tw = self.taper_width;
        if tw == 0 || depth + tw <= p {
            1.0
        } else {
            let s = (depth + tw - p) as f64 / tw as f64;
            1.0 - s * s * (3.0 - 2.0 * s)
        }
    }

    /// Whether extended node `(j, n)` lies in a tapered layer.
    pub fn is_tapered(&self, j: usize, n: usize) -> bool {
        let depth = |i: usize, len: usize| {
            if i < self.ghost {
                self.ghost - i
            } else if i >= self.ghost + len {
                i + 1 - self.ghost - len
            } else {
                0
            }
        };
        let dj = depth(j, self.base.nx());
        let dn = depth(n, self.base.ny());
        (dj > 0 && self.cutoff(dj) < 1.0) || (dn > 0 && self.cutoff(dn) < 1.0)
    }
}

/// 1D extension matrix of size `(n + 2p) × n`, cutoff included.
pub fn axis_extension(n: usize, egrid: &ExtendedGrid) -> Mat<f64> {
    let p = egrid.ghost();
    let mut e = Mat::zeros(n + 2 * p, n);
    for i in 0..n {
        e[(p + i, i)] = 1.0;
    }
    for d in 1..=p {
        let chi = egrid.cutoff(d);
        e[(p - d, d)] += 3.0 * chi;
        e[(p - d, 2 * d)] -= 2.0 * chi;
        e[(p + n - 1 + d, n - 1 - d)] += 3.0 * chi;
        e[(p + n - 1 + d, n - 1 - 2 * d)] -= 2.0 * chi;
    }
    e
}

/// The operator `E = E_y ⊗ E_x` from base-grid vectors to extended-grid
/// vectors (both x-fastest).
#[derive(Debug, Clone)]
pub struct Extension {
    egrid: ExtendedGrid,
    x: Mat<f64>,
    y: Mat<f64>,
}

impl Extension {
    pub fn x_factor(&self) -> &Mat<f64> {
        &self.x
    }

    pub fn y_factor(&self) -> &Mat<f64> {
        &self.y
    }

    pub fn egrid(&self) -> &ExtendedGrid {
        &self.egrid
    }

    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("base-grid vector", self.egrid.base().len(), u.len())?;
        Ok(kron_apply(self.y.as_ref(), self.x.as_ref(), u))
    }

    /// Restriction of an extended vector to the base nodes.
    pub fn restrict(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("extended-grid vector", self.egrid.len(), v.len())?;
        let base = self.egrid.base();
        let (p, mx) = (self.egrid.ghost(), self.egrid.nx());
        let mut out = Vec::with_capacity(base.len());
        for n in 0..base.ny() {
            let start = (n + p) * mx + p;
            out.extend_from_slice(&v[start..start + base.nx()]);
        }
        Ok(out)
    }
}

pub fn build_extension(egrid: &ExtendedGrid) -> Extension {
    Extension {
        egrid: *egrid,
        x: axis_extension(egrid.base().nx(), egrid),
        y: axis_extension(egrid.base().ny(), egrid),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::RectDomain;

    fn grid(nx: usize, ny: usize) -> Grid2D {
        Grid2D::new(RectDomain::new(-1.0, 1.0).unwrap(), nx, ny).unwrap()
    }

    #[test]
    fn validates_depth() {
        let g = grid(11, 9);
        assert!(ExtendedGrid::new(g, 4, 2).is_ok());
        assert!(ExtendedGrid::new(g, 4, 0).is_ok());
        assert!(ExtendedGrid::new(g, 3, 2).is_err());
        assert_eq!(
            ExtendedGrid::new(g, 5, 0),
            Err(Error::GhostBandTooDeep { ghost: 5, len: 9 })
        );
    }

    #[test]
    fn linear_field_continues_across_top_edge() {
        let g = grid(11, 11);
        let eg = ExtendedGrid::new(g, 4, 0).unwrap();
        let e = build_extension(&eg);
        let u = g.sample(|x, y| x + 2.0 * y);
        let v = e.apply(&u).unwrap();
        let n = eg.ghost() + g.ny();
        for j in 0..eg.nx() {
            let want = eg.x(j) + 2.0 * (1.0 + g.dy());
            assert!((v[n * eg.nx() + j] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constants_and_taper() {
        let g = grid(13, 11);
        let eg = ExtendedGrid::new(g, 4, 2).unwrap();
        let e = build_extension(&eg);
        let v = e.apply(&vec![1.0; g.len()]).unwrap();
        for n in 0..eg.ny() {
            for j in 0..eg.nx() {
                let val = v[n * eg.nx() + j];
                if !eg.is_tapered(j, n) {
                    assert!((val - 1.0).abs() < 1e-14);
                } else {
                    assert!((0.0..1.0).contains(&val));
                }
            }
        }
        // outermost ring is cut to zero
        assert_eq!(v[0], 0.0);
        assert_eq!(eg.cutoff(4), 0.0);
        assert_eq!(eg.cutoff(2), 1.0);
        assert!(eg.cutoff(3) > 0.0 && eg.cutoff(3) < 1.0);
    }

    #[test]
    fn quadratic_is_only_first_order() {
        let g = grid(11, 11);
        let eg = ExtendedGrid::new(g, 3, 0).unwrap();
        let e = build_extension(&eg);
        let v = e.apply(&g.sample(|_, y| y * y)).unwrap();
        for d in 1..=3 {
            let t = d as f64 * g.dy();
            let got = v[(eg.ghost() + g.ny() - 1 + d) * eg.nx() + 5];
            assert!((got - (1.0 + 2.0 * t - 5.0 * t * t)).abs() < 1e-14);
            assert!((got - (1.0 + t).powi(2)).abs() > 1e-3 * t * t);
        }
    }

    #[test]
    fn restriction_is_bit_exact() {
        let g = grid(9, 7);
        let eg = ExtendedGrid::new(g, 3, 1).unwrap();
        let e = build_extension(&eg);
        let u: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 1.37).sin() * 1e3).collect();
        assert_eq!(e.restrict(&e.apply(&u).unwrap()).unwrap(), u);
    }
}
