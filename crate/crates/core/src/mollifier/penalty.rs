//! The mollifier penalty `Eᵀ(I - C)ᵀ D (I - C) E`.
//!
//! Every ingredient is a Kronecker product or a short sum of them:
//!
//! ```text
//! W = R(I - C)E = P ⊗ ΔQ + ΔP ⊗ Q_c      P  = R_y E_y,  ΔP = R_y (I - C_y) E_y
//!                                        Q_c = R_x C_x E_x, ΔQ = R_x (I - C_x) E_x
//! D = I ⊗ (I + d_xᵀd_x + d_xxᵀd_xx) + (d_yᵀd_y + d_yyᵀd_yy) ⊗ I + 2 d_yᵀd_y ⊗ d_xᵀd_x
//! ```
//!
//! so `WᵀDW` is a sum of twelve Kronecker products of `n_y × n_y` and
//! `n_x × n_x` factors. Splitting `W` this way (rather than as
//! `P ⊗ Q - P_c ⊗ Q_c`) keeps every factor small when `C ≈ I`, so the terms
//! do not cancel. `R` restricts to the window on which the penalty is
//! measured (see [`PenaltyWindow`]).

use faer::Mat;

use super::convolution::{build_convolution, Convolution};
use super::derivatives::DifferenceOperators;
use super::extension::{build_extension, ExtendedGrid, Extension};
use super::kernel::GaussianKernel;
use super::kron::{gram, kron_add_into, kron_apply, kron_apply_add, kron_diagonal, sandwich};
use crate::error::{check_len, Result};

/// Which extended-grid nodes the weighted norm `D` is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyWindow {
    /// Only nodes whose whole convolution stencil lies inside the extended
    /// grid. Rows of `C` near the extended-grid edge are renormalized and do
    /// not reproduce affine fields, so including them penalizes smooth
    /// solutions.
    #[default]
    Valid,
    /// Every extended-grid node.
    Full,
}

/// Index range `[start, start + len)` of the penalty window along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisWindow {
    pub start: usize,
    pub len: usize,
}

#[derive(Debug, Clone)]
struct KronTerm {
    coef: f64,
    y: Mat<f64>,
    x: Mat<f64>,
}

/// Extension, convolution, difference operators and the assembled penalty for
/// one kernel width.
#[derive(Debug, Clone)]
pub struct RegularizerStack {
    kernel: GaussianKernel,
    egrid: ExtendedGrid,
    extension: Extension,
    convolution: Convolution,
    window: (AxisWindow, AxisWindow),
    diff: DifferenceOperators,
    terms: Vec<KronTerm>,
}

/// Builds the penalty measured on the [`PenaltyWindow::Valid`] window.
pub fn build_penalty(kernel: &GaussianKernel, egrid: &ExtendedGrid) -> Result<RegularizerStack> {
    build_penalty_with(kernel, egrid, PenaltyWindow::Valid)
}

pub fn build_penalty_with(
    kernel: &GaussianKernel,
    egrid: &ExtendedGrid,
    window: PenaltyWindow,
) -> Result<RegularizerStack> {
    let extension = build_extension(egrid);
    let convolution = build_convolution(kernel, egrid)?;
    let (rx, ry) = match window {
        PenaltyWindow::Valid => convolution.radius(),
        PenaltyWindow::Full => (0, 0),
    };
    let wx = AxisWindow {
        start: rx,
        len: egrid.nx() - 2 * rx,
    };
    let wy = AxisWindow {
        start: ry,
        len: egrid.ny() - 2 * ry,
    };
    let base = egrid.base();
    let diff = DifferenceOperators::new(wx.len, wy.len, base.dx(), base.dy());

    let rows = |m: &Mat<f64>, w: AxisWindow| Mat::from_fn(w.len, m.ncols(), |i, j| m[(w.start + i, j)]);
    let ex = extension.x_factor();
    let ey = extension.y_factor();
    let cex = super::kron::product(convolution.x_factor().as_ref(), ex.as_ref());
    let cey = super::kron::product(convolution.y_factor().as_ref(), ey.as_ref());
    let rough = |m: &Mat<f64>, cm: &Mat<f64>| Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] - cm[(i, j)]);
    let p = [rows(ey, wy), rows(&rough(ey, &cey), wy)];
    let q = [rows(&rough(ex, &cex), wx), rows(&cex, wx)];

    let ix = Mat::<f64>::identity(wx.len, wx.len);
    let iy = Mat::<f64>::identity(wy.len, wy.len);
    let dxtdx = gram(diff.dx.as_ref(), diff.dx.as_ref());
    let dytdy = gram(diff.dy.as_ref(), diff.dy.as_ref());
    let x_smooth = &ix + &dxtdx + gram(diff.dxx.as_ref(), diff.dxx.as_ref());
    let y_smooth = &dytdy + gram(diff.dyy.as_ref(), diff.dyy.as_ref());
    let d_terms = [(1.0, iy, x_smooth), (1.0, y_smooth, ix), (2.0, dytdy, dxtdx)];

    // the (a, b) and (b, a) terms are transposes of each other; build one
    // and transpose it so the assembled matrix is symmetric to rounding
    let sym = |m: Mat<f64>| Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut terms = Vec::with_capacity(12);
    for (c, yt, xt) in &d_terms {
        for a in 0..2 {
            terms.push(KronTerm {
                coef: *c,
                y: sym(sandwich(p[a].as_ref(), yt.as_ref(), p[a].as_ref())),
                x: sym(sandwich(q[a].as_ref(), xt.as_ref(), q[a].as_ref())),
            });
        }
        let y = sandwich(p[0].as_ref(), yt.as_ref(), p[1].as_ref());
        let x = sandwich(q[0].as_ref(), xt.as_ref(), q[1].as_ref());
        terms.push(KronTerm {
            coef: *c,
            y: y.transpose().to_owned(),
            x: x.transpose().to_owned(),
        });
        terms.push(KronTerm { coef: *c, y, x });
    }

    Ok(RegularizerStack {
        kernel: *kernel,
        egrid: *egrid,
        extension,
        convolution,
        window: (wx, wy),
        diff,
        terms,
    })
}

impl RegularizerStack {
    pub fn kernel(&self) -> &GaussianKernel {
        &self.kernel
    }

    pub fn egrid(&self) -> &ExtendedGrid {
        &self.egrid
    }

    pub fn extension(&self) -> &Extension {
        &self.extension
    }

    pub fn convolution(&self) -> &Convolution {
        &self.convolution
    }

    /// Difference operators on the penalty window.
    pub fn derivatives(&self) -> &DifferenceOperators {
        &self.diff
    }

    /// Windows `(x, y)` in extended-grid indices.
    pub fn window(&self) -> (AxisWindow, AxisWindow) {
        self.window
    }

    /// Size of the base grid, i.e. of the penalty matrix.
    pub fn size(&self) -> usize {
        self.egrid.base().len()
    }

    /// `penalty · u` from the Kronecker factors.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("base-grid vector", self.size(), u.len())?;
        let mut out = vec![0.0; u.len()];
        self.apply_add(u, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_add(&self, u: &[f64], out: &mut [f64]) {
        for t in &self.terms {
            kron_apply_add(t.y.as_ref(), t.x.as_ref(), u, t.coef, out);
        }
    }

    /// `R(I - C)E u`: the non-smooth part of the extension, on the window.
    pub fn rough_part(&self, u: &[f64]) -> Result<Vec<f64>> {
        let v = self.extension.apply(u)?;
        let cv = self.convolution.apply(&v)?;
        let (wx, wy) = self.window;
        let mx = self.egrid.nx();
        let mut out = Vec::with_capacity(wx.len * wy.len);
        for n in wy.start..wy.start + wy.len {
            for j in wx.start..wx.start + wx.len {
                out.push(v[n * mx + j] - cv[n * mx + j]);
            }
        }
        Ok(out)
    }

    /// Penalty value `‖R(I - C)E u‖²_D`.
    pub fn value(&self, u: &[f64]) -> Result<f64> {
        self.diff.weighted_norm_sq(&self.rough_part(u)?)
    }

    /// `penalty · u` by chaining the operators literally:
    /// `Eᵀ(I - C)ᵀRᵀ D R(I - C)E u`. Slower than [`Self::apply`]; kept as an
    /// independent check of the Kronecker assembly.
    pub fn apply_reference(&self, u: &[f64]) -> Result<Vec<f64>> {
        let w = self.rough_part(u)?;
        let d = &self.diff;
        let mut dw = w.clone();
        let t = |m: &Mat<f64>| m.transpose().to_owned();
        let (wx, wy) = self.window;
        let ix = Mat::<f64>::identity(wx.len, wx.len);
        let iy = Mat::<f64>::identity(wy.len, wy.len);
        let pairs: [(f64, &Mat<f64>, &Mat<f64>); 5] = [
            (1.0, &iy, &d.dx),
            (1.0, &d.dy, &ix),
            (1.0, &iy, &d.dxx),
            (1.0, &d.dyy, &ix),
            (2.0, &d.dy, &d.dx),
        ];
        for (c, y, x) in pairs {
            let z = kron_apply(y.as_ref(), x.as_ref(), &w);
            kron_apply_add(t(y).as_ref(), t(x).as_ref(), &z, c, &mut dw);
        }
        // Rᵀ: zero-fill outside the window
        let (mx, my) = (self.egrid.nx(), self.egrid.ny());
        let mut full = vec![0.0; mx * my];
        for (k, n) in (wy.start..wy.start + wy.len).enumerate() {
            let dst = n * mx + wx.start;
            full[dst..dst + wx.len].copy_from_slice(&dw[k * wx.len..(k + 1) * wx.len]);
        }
        let cx = self.convolution.x_factor();
        let cy = self.convolution.y_factor();
        let mut z = full.clone();
        kron_apply_add(t(cy).as_ref(), t(cx).as_ref(), &full, -1.0, &mut z);
        let ex = self.extension.x_factor();
        let ey = self.extension.y_factor();
        Ok(kron_apply(t(ey).as_ref(), t(ex).as_ref(), &z))
    }

    /// Dense `n_x n_y × n_x n_y` penalty matrix.
    pub fn materialize(&self) -> Mat<f64> {
        let n = self.size();
        let mut m = Mat::zeros(n, n);
        self.add_into(&mut m);
        m
    }

    /// `m += penalty`.
    pub fn add_into(&self, m: &mut Mat<f64>) {
        for t in &self.terms {
            kron_add_into(t.y.as_ref(), t.x.as_ref(), t.coef, m);
        }
    }

    /// Diagonal of the penalty matrix (for diagonal preconditioning).
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.size()];
        for t in &self.terms {
            for (a, b) in d.iter_mut().zip(kron_diagonal(t.y.as_ref(), t.x.as_ref())) {
                *a += t.coef * b;
            }
        }
        d
    }
}
