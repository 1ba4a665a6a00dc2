//! Second-order difference operators: centred in the interior, one-sided
//! second-order at both ends.

use faer::Mat;

use super::extension::ExtendedGrid;
use super::kron::kron_apply;
use crate::error::{check_len, Result};

/// First derivative on `m ≥ 3` nodes; ends use `(-3, 4, -1) / 2h`.
pub fn first_difference(m: usize, h: f64) -> Mat<f64> {
    let mut d = Mat::zeros(m, m);
    let s = 0.5 / h;
    for i in 1..m - 1 {
        d[(i, i - 1)] = -s;
        d[(i, i + 1)] = s;
    }
    d[(0, 0)] = -3.0 * s;
    d[(0, 1)] = 4.0 * s;
    d[(0, 2)] = -s;
    d[(m - 1, m - 1)] = 3.0 * s;
    d[(m - 1, m - 2)] = -4.0 * s;
    d[(m - 1, m - 3)] = s;
    d
}

/// Second derivative on `m ≥ 4` nodes; ends use `(2, -5, 4, -1) / h²`.
pub fn second_difference(m: usize, h: f64) -> Mat<f64> {
    let mut d = Mat::zeros(m, m);
    let s = 1.0 / (h * h);
    for i in 1..m - 1 {
        d[(i, i - 1)] = s;
        d[(i, i)] = -2.0 * s;
        d[(i, i + 1)] = s;
    }
    for (k, c) in [2.0, -5.0, 4.0, -1.0].into_iter().enumerate() {
        d[(0, k)] = c * s;
        d[(m - 1, m - 1 - k)] = c * s;
    }
    d
}

/// `D_x, D_y, D_xx, D_yy, D_xy` on an `m_x × m_y` grid, kept as their 1D
/// factors: `D_x = I ⊗ d_x`, `D_y = d_y ⊗ I`, `D_xy = d_y ⊗ d_x = D_x D_y`.
#[derive(Debug, Clone)]
pub struct DifferenceOperators {
    pub dx: Mat<f64>,
    pub dxx: Mat<f64>,
    pub dy: Mat<f64>,
    pub dyy: Mat<f64>,
}

impl DifferenceOperators {
    pub fn new(mx: usize, my: usize, hx: f64, hy: f64) -> Self {
        Self {
            dx: first_difference(mx, hx),
            dxx: second_difference(mx, hx),
            dy: first_difference(my, hy),
            dyy: second_difference(my, hy),
        }
    }

    pub fn mx(&self) -> usize {
        self.dx.nrows()
    }

    pub fn my(&self) -> usize {
        self.dy.nrows()
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        check_len("grid vector", self.mx() * self.my(), v.len())
    }

    pub fn apply_dx(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(kron_apply(Mat::identity(self.my(), self.my()).as_ref(), self.dx.as_ref(), v))
    }

    pub fn apply_dy(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(kron_apply(self.dy.as_ref(), Mat::identity(self.mx(), self.mx()).as_ref(), v))
    }

    pub fn apply_dxx(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(kron_apply(Mat::identity(self.my(), self.my()).as_ref(), self.dxx.as_ref(), v))
    }

    pub fn apply_dyy(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(kron_apply(self.dyy.as_ref(), Mat::identity(self.mx(), self.mx()).as_ref(), v))
    }

    pub fn apply_dxy(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(kron_apply(self.dy.as_ref(), self.dx.as_ref(), v))
    }

    /// `vᵀ D v` with `D = I + D_xᵀD_x + D_yᵀD_y + D_xxᵀD_xx + D_yyᵀD_yy + 2 D_xyᵀD_xy`.
    pub fn weighted_norm_sq(&self, v: &[f64]) -> Result<f64> {
        let sq = |w: Vec<f64>| w.iter().map(|a| a * a).sum::<f64>();
        Ok(sq(v.to_vec())
            + sq(self.apply_dx(v)?)
            + sq(self.apply_dy(v)?)
            + sq(self.apply_dxx(v)?)
            + sq(self.apply_dyy(v)?)
            + 2.0 * sq(self.apply_dxy(v)?))
    }
}

/// Difference operators on the whole extended grid.
pub fn build_derivatives(egrid: &ExtendedGrid) -> DifferenceOperators {
    let base = egrid.base();
    DifferenceOperators::new(egrid.nx(), egrid.ny(), base.dx(), base.dy())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use crate::problem::RectDomain;

    fn setup() -> (ExtendedGrid, DifferenceOperators, Vec<(f64, f64)>) {
        let g = Grid2D::new(RectDomain::new(-1.0, 2.0).unwrap(), 13, 9).unwrap();
        let eg = ExtendedGrid::new(g, 3, 0).unwrap();
        let ops = build_derivatives(&eg);
        let pts = (0..eg.ny())
            .flat_map(|n| (0..eg.nx()).map(move |j| (j, n)))
            .map(|(j, n)| (eg.x(j), eg.y(n)))
            .collect();
        (eg, ops, pts)
    }

    fn field(pts: &[(f64, f64)], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        pts.iter().map(|&(x, y)| f(x, y)).collect()
    }

    #[test]
    fn exact_on_low_degree() {
        let (_, ops, pts) = setup();
        let ones = |v: Vec<f64>, want: f64, tol: f64| {
            assert!(v.iter().all(|a| (a - want).abs() < tol), "{v:?}");
        };
        ones(ops.apply_dx(&field(&pts, |x, _| x)).unwrap(), 1.0, 1e-12);
        ones(ops.apply_dy(&field(&pts, |_, y| 3.0 * y)).unwrap(), 3.0, 1e-12);
        ones(ops.apply_dxx(&field(&pts, |x, _| x * x)).unwrap(), 2.0, 1e-10);
        ones(ops.apply_dyy(&field(&pts, |x, y| y * y + x)).unwrap(), 2.0, 1e-10);
        ones(ops.apply_dxy(&field(&pts, |x, y| x * y)).unwrap(), 1.0, 1e-10);
    }

    #[test]
    fn mixed_is_composition() {
        let (_, ops, pts) = setup();
        let v = field(&pts, |x, y| (x * 1.3).sin() * (2.0 * y).exp());
        let a = ops.apply_dxy(&v).unwrap();
        let b = ops.apply_dx(&ops.apply_dy(&v).unwrap()).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() < 1e-10 * p.abs().max(1.0));
        }
    }

    #[test]
    fn weighted_norm_of_constant() {
        let (eg, ops, _) = setup();
        let v = vec![2.0; eg.len()];
        let n = ops.weighted_norm_sq(&v).unwrap();
        assert!((n - 4.0 * eg.len() as f64).abs() < 1e-8);
    }
}
