//! Regularized normal equations `(AᵀA + penalty) U = AᵀB`.
//!
//! `M = AᵀA + penalty` is symmetric positive definite because `A` is
//! invertible and the penalty is a Gram form, so the iterative path is
//! conjugate gradients and the direct path is a dense Cholesky factorization.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::{Llt, Solve};
use faer::{Accum, Mat, MatRef, Par, Side};

use crate::assembly::ForwardSystem;
use crate::error::{check_len, invalid, Error, Result};
use crate::mollifier::RegularizerStack;

/// Largest system the direct path will materialize.
pub const DIRECT_SIZE_LIMIT: usize = 20_000;

/// Relative residual the direct path must reach.
pub const DIRECT_RESIDUAL_LIMIT: f64 = 1e-8;

/// Relative asymmetry tolerated before factorizing.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// A symmetric linear map `u ↦ M u`.
pub trait LinearOperator {
    fn size(&self) -> usize;
    fn apply_into(&self, u: &[f64], out: &mut [f64]);

    fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        self.apply_into(u, &mut out);
        out
    }
}

impl LinearOperator for Mat<f64> {
    fn size(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let dst = faer::MatMut::from_column_major_slice_mut(out, self.nrows(), 1);
        matmul(dst, Accum::Replace, self, MatRef::from_column_major_slice(u, u.len(), 1), 1.0, Par::Seq);
    }
}

/// Dense `AᵀA`, accumulated block by block from the block-banded `A`.
pub fn forward_gram(sys: &ForwardSystem) -> Mat<f64> {
    let grid = sys.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let levels: Vec<Mat<f64>> = sys
        .levels()
        .iter()
        .map(|l| Mat::from_fn(nx, nx, |i, j| l.get(i, j)))
        .collect();
    let eye = Mat::<f64>::identity(nx, nx);
    let two = Mat::<f64>::from_fn(nx, nx, |i, j| if i == j { 2.0 } else { 0.0 });
    let mut gram = Mat::<f64>::zeros(nx * ny, nx * ny);
    for r in 0..ny {
        let row: Vec<(usize, &Mat<f64>)> = match r {
            0 => vec![(0, &eye)],
            1 => vec![(0, &levels[0]), (1, &two)],
            _ => vec![(r - 2, &eye), (r - 1, &levels[r - 1]), (r, &eye)],
        };
        for &(k, bk) in &row {
            for &(l, bl) in &row {
                let dst = gram.as_mut().submatrix_mut(k * nx, l * nx, nx, nx);
                matmul(dst, Accum::Add, bk.transpose(), bl, 1.0, Par::Seq);
            }
        }
    }
    gram
}

/// `M = AᵀA + penalty` with right-hand side `AᵀB`, applied matrix-free.
#[derive(Debug, Clone)]
pub struct NormalSystem<'a> {
    forward: &'a ForwardSystem,
    penalty: &'a RegularizerStack,
    rhs: Vec<f64>,
}

pub fn assemble_normal<'a>(
    forward: &'a ForwardSystem,
    penalty: &'a RegularizerStack,
    b: &[f64],
) -> Result<NormalSystem<'a>> {
    check_len("penalty size", forward.size(), penalty.size())?;
    let rhs = forward.apply_transpose(b)?;
    Ok(NormalSystem { forward, penalty, rhs })
}

impl<'a> NormalSystem<'a> {
    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn forward(&self) -> &ForwardSystem {
        self.forward
    }

    pub fn penalty(&self) -> &RegularizerStack {
        self.penalty
    }

    /// Dense `M`. Pass a precomputed `AᵀA` to reuse it across kernels.
    pub fn materialize(&self, gram: Option<&Mat<f64>>) -> Result<Mat<f64>> {
        let n = self.forward.size();
        if n > DIRECT_SIZE_LIMIT {
            return Err(Error::SizeGuard {
                size: n,
                limit: DIRECT_SIZE_LIMIT,
            });
        }
        let mut m = match gram {
            Some(g) => g.clone(),
            None => forward_gram(self.forward),
        };
        self.penalty.add_into(&mut m);
        Ok(m)
    }

    /// Factorizes the materialized `M` and solves it.
    pub fn solve_direct(&self) -> Result<Vec<f64>> {
        DirectSolver::factor(self.materialize(None)?)?.solve(&self.rhs)
    }

    /// Conjugate gradients on the matrix-free `M`.
    pub fn solve_spd(&self, tol: f64, max_iter: usize, guess: Option<&[f64]>) -> Result<CgOutcome> {
        solve_spd(self, &self.rhs, tol, max_iter, guess)
    }
}

impl LinearOperator for NormalSystem<'_> {
    fn size(&self) -> usize {
        self.forward.size()
    }

    fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        let mut au = vec![0.0; n];
        self.forward.apply_into(u, &mut au);
        self.forward.apply_transpose_into(&au, out);
        self.penalty.apply_add(u, out);
    }
}

/// Result of a conjugate-gradient run.
#[derive(Debug, Clone, PartialEq)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
    /// `‖M u - b‖ / ‖b‖` recomputed from the returned solution.
    pub rel_residual: f64,
    pub converged: bool,
    /// Recursively updated relative residual after each iteration (entry 0 is
    /// the initial guess).
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual(op: &impl LinearOperator, u: &[f64], b: &[f64]) -> Vec<f64> {
    let mu = op.apply(u);
    b.iter().zip(&mu).map(|(x, y)| x - y).collect()
}

/// Conjugate gradients for a symmetric positive definite `op`.
///
/// Stops once the relative residual drops to `tol` or after `max_iter`
/// iterations and returns the iterate with the smallest residual;
/// non-convergence is reported through
/// [`CgOutcome::converged`], not as an error.
pub fn solve_spd(
    op: &impl LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
    guess: Option<&[f64]>,
) -> Result<CgOutcome> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(invalid("tol", format!("{tol} must be positive")));
    }
    let n = op.size();
    check_len("right-hand side", n, b.len())?;
    let mut u = match guess {
        Some(g) => {
            check_len("initial guess", n, g.len())?;
            g.to_vec()
        }
        None => vec![0.0; n],
    };
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(CgOutcome {
            solution: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
            history: vec![0.0],
        });
    }
    let mut r = residual(op, &u, b);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut history = vec![rr.sqrt() / bnorm];
    let mut mp = vec![0.0; n];
    let mut iterations = 0;
    // CG residuals are not monotone; keep the best iterate seen
    let mut best = (rr, u.clone());
    while rr.sqrt() > tol * bnorm && iterations < max_iter {
        op.apply_into(&p, &mut mp);
        let pmp = dot(&p, &mp);
        if pmp <= 0.0 {
            break;
        }
        let step = rr / pmp;
        for i in 0..n {
            u[i] += step * p[i];
            r[i] -= step * mp[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
        iterations += 1;
        history.push(rr.sqrt() / bnorm);
        if rr < best.0 {
            best.0 = rr;
            best.1.copy_from_slice(&u);
        }
    }
    let u = best.1;
    let rel_residual = norm(&residual(op, &u, b)) / bnorm;
    Ok(CgOutcome {
        solution: u,
        iterations,
        rel_residual,
        converged: rel_residual <= tol,
        history,
    })
}

/// Cholesky factorization of a materialized `M`, reusable across
/// right-hand sides.
#[derive(Debug)]
pub struct DirectSolver {
    matrix: Mat<f64>,
    llt: Llt<f64>,
}

impl DirectSolver {
    /// Checks symmetry and factorizes.
    pub fn factor(matrix: Mat<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n > DIRECT_SIZE_LIMIT {
            return Err(Error::SizeGuard {
                size: n,
                limit: DIRECT_SIZE_LIMIT,
            });
        }
        check_len("square matrix", n, matrix.ncols())?;
        let (asymmetry, scale) = asymmetry(&matrix);
        if asymmetry > SYMMETRY_TOLERANCE * scale {
            return Err(Error::NotSymmetric { asymmetry, norm: scale });
        }
        let llt = matrix.llt(Side::Lower).map_err(|_| Error::NotPositiveDefinite)?;
        Ok(Self { matrix, llt })
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    /// Solves `M u = b` with two steps of iterative refinement and checks
    /// the relative residual against [`DIRECT_RESIDUAL_LIMIT`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (u, rel) = self.solve_unchecked(b)?;
        if rel > DIRECT_RESIDUAL_LIMIT {
            return Err(Error::InaccurateSolve {
                residual: rel,
                limit: DIRECT_RESIDUAL_LIMIT,
            });
        }
        Ok(u)
    }

    /// Solution and its relative residual, without the accuracy check.
    pub fn solve_unchecked(&self, b: &[f64]) -> Result<(Vec<f64>, f64)> {
        let n = self.matrix.nrows();
        check_len("right-hand side", n, b.len())?;
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok((vec![0.0; n], 0.0));
        }
        let solve = |v: &[f64]| -> Vec<f64> {
            let x = self.llt.solve(MatRef::from_column_major_slice(v, n, 1));
            x.col_as_slice(0).to_vec()
        };
        let mut u = solve(b);
        let mut r = residual(&self.matrix, &u, b);
        let mut rel = norm(&r) / bnorm;
        for _ in 0..2 {
            let du = solve(&r);
            let cand: Vec<f64> = u.iter().zip(&du).map(|(a, d)| a + d).collect();
            let r_cand = residual(&self.matrix, &cand, b);
            let rel_cand = norm(&r_cand) / bnorm;
            if rel_cand >= rel {
                break;
            }
            u = cand;
            r = r_cand;
            rel = rel_cand;
        }
        Ok((u, rel))
    }
}

/// `(max |m_ij - m_ji|, ‖m‖_∞)`.
pub fn asymmetry(m: &Mat<f64>) -> (f64, f64) {
    let n = m.nrows();
    let mut worst = 0.0f64;
    let mut rows = vec![0.0f64; n];
    for j in 0..n {
        for i in 0..n {
            rows[i] += m[(i, j)].abs();
            if i > j {
                worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
    }
    (worst, rows.into_iter().fold(0.0, f64::max))
}

/// Discrete objective `J(U) = ‖A U - B‖² + ‖R(I - C)E U‖²_D`.
pub fn objective(forward: &ForwardSystem, penalty: &RegularizerStack, b: &[f64], u: &[f64]) -> Result<f64> {
    let au = forward.apply(u)?;
    check_len("right-hand side", au.len(), b.len())?;
    let misfit: f64 = au.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(misfit + penalty.value(u)?)
}
