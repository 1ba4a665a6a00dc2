//! Kronecker-factored operators on x-fastest grid vectors.
//!
//! A vector over an `n_x × n_y` grid, stored x-fastest, is the column-major
//! `n_x × n_y` matrix `U` whose column `n` is level `n`. An operator acting
//! as `Y ⊗ X` on the vector acts as `U ↦ X U Yᵀ` on the matrix.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};

/// `(Y ⊗ X) u` for `u` of length `X.ncols() · Y.ncols()`.
pub fn kron_apply(y: MatRef<'_, f64>, x: MatRef<'_, f64>, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; x.nrows() * y.nrows()];
    kron_apply_add(y, x, u, 1.0, &mut out);
    out
}

/// `out += scale · (Y ⊗ X) u`.
pub fn kron_apply_add(y: MatRef<'_, f64>, x: MatRef<'_, f64>, u: &[f64], scale: f64, out: &mut [f64]) {
    let um = MatRef::from_column_major_slice(u, x.ncols(), y.ncols());
    let mut xu = Mat::<f64>::zeros(x.nrows(), y.ncols());
    matmul(&mut xu, Accum::Replace, x, um, 1.0, Par::Seq);
    let dst = faer::MatMut::from_column_major_slice_mut(out, x.nrows(), y.nrows());
    matmul(dst, Accum::Add, &xu, y.transpose(), scale, Par::Seq);
}

/// Dense `Y ⊗ X` (row/column index `n·rows(X) + j`).
pub fn kron_dense(y: MatRef<'_, f64>, x: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(x.nrows() * y.nrows(), x.ncols() * y.ncols());
    kron_add_into(y, x, 1.0, &mut out);
    out
}

/// `out += scale · (Y ⊗ X)`.
pub fn kron_add_into(y: MatRef<'_, f64>, x: MatRef<'_, f64>, scale: f64, out: &mut Mat<f64>) {
    let (xr, xc) = (x.nrows(), x.ncols());
    for m in 0..y.ncols() {
        for i in 0..xc {
            let col = out.col_as_slice_mut(m * xc + i);
            for n in 0..y.nrows() {
                let s = scale * y[(n, m)];
                if s == 0.0 {
                    continue;
                }
                let dst = &mut col[n * xr..(n + 1) * xr];
                for (d, xv) in dst.iter_mut().zip(x.col(i).iter()) {
                    *d += s * xv;
                }
            }
        }
    }
}

/// Diagonal of `Y ⊗ X` for square factors.
pub fn kron_diagonal(y: MatRef<'_, f64>, x: MatRef<'_, f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.nrows() * y.nrows());
    for n in 0..y.nrows() {
        for j in 0..x.nrows() {
            out.push(y[(n, n)] * x[(j, j)]);
        }
    }
    out
}

/// `Aᵀ B` for small dense factors.
pub(crate) fn gram(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.ncols(), b.ncols());
    matmul(&mut out, Accum::Replace, a.transpose(), b, 1.0, Par::Seq);
    out
}

/// `Aᵀ X B`.
pub(crate) fn sandwich(a: MatRef<'_, f64>, x: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut xb = Mat::zeros(x.nrows(), b.ncols());
    matmul(&mut xb, Accum::Replace, x, b, 1.0, Par::Seq);
    gram(a, xb.as_ref())
}

/// `A · B`.
pub(crate) fn product(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(&mut out, Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

/// Dense matrix-vector product.
#[cfg(test)]
pub(crate) fn mat_vec(a: MatRef<'_, f64>, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.nrows()];
    let dst = faer::MatMut::from_column_major_slice_mut(&mut out, a.nrows(), 1);
    matmul(dst, Accum::Replace, a, MatRef::from_column_major_slice(u, u.len(), 1), 1.0, Par::Seq);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(rows: usize, cols: usize, seed: f64) -> Mat<f64> {
        Mat::from_fn(rows, cols, |i, j| ((i * 7 + j * 3) as f64 * seed).sin())
    }

    #[test]
    fn apply_matches_dense() {
        let y = small(3, 4, 0.37);
        let x = small(5, 2, 0.91);
        let u: Vec<f64> = (0..8).map(|i| (i as f64).cos()).collect();
        let fast = kron_apply(y.as_ref(), x.as_ref(), &u);
        let dense = kron_dense(y.as_ref(), x.as_ref());
        let slow = mat_vec(dense.as_ref(), &u);
        assert_eq!(fast.len(), 15);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-13);
        }
        // entry layout
        assert_eq!(dense[(2 * 5 + 4, 3 * 2 + 1)], y[(2, 3)] * x[(4, 1)]);
    }

    #[test]
    fn diagonal_matches_dense() {
        let y = small(3, 3, 0.2);
        let x = small(4, 4, 0.5);
        let d = kron_diagonal(y.as_ref(), x.as_ref());
        let dense = kron_dense(y.as_ref(), x.as_ref());
        for (i, v) in d.iter().enumerate() {
            assert_eq!(*v, dense[(i, i)]);
        }
    }
}
