//! Finite-difference discretization and the block-triangular forward system.
//!
//! The five-point scheme with a central difference for `u_y(x, 0)` gives, after
//! eliminating the ghost row below `y = 0`,
//!
//! ```text
//! U¹                         = G
//! 2U² + A_1 U¹               = dy² S¹ + 2 dy F
//! U^{m+1} + A_m U^m + U^{m-1} = dy² S^m          m = 2 .. n_y - 1
//! ```
//!
//! where `A_m` is the "nearly tridiagonal" level matrix built by
//! [`assemble_level`]. Stacking the levels gives `A U = B` with `A` block lower
//! triangular with identity (or `2I`) diagonal blocks, so `A` is invertible and
//! [`ForwardSystem::march_solve`] inverts it by block forward substitution.
//!
//! Indices are 0-based throughout: level `ℓ` is `y = ℓ·dy`, and the level
//! matrix written `A_m` above is [`LevelMatrix`] at level `ℓ = m - 1`.

use crate::error::{check_len, Error, Result};
use crate::grid::Grid2D;
use crate::problem::CauchyCase;

/// `Λ_j^ℓ = 2 + 2γ - k² dy² η(x_j, y_ℓ)`.
pub fn lambda_coeff(grid: &Grid2D, case: &CauchyCase, j: usize, level: usize) -> Result<f64> {
    if j >= grid.nx() {
        return Err(Error::IndexOutOfRange {
            what: "x index",
            index: j,
            len: grid.nx(),
        });
    }
    if level >= grid.ny() {
        return Err(Error::IndexOutOfRange {
            what: "level",
            index: level,
            len: grid.ny(),
        });
    }
    Ok(lambda_at(grid, case, j, level))
}

fn lambda_at(grid: &Grid2D, case: &CauchyCase, j: usize, level: usize) -> f64 {
    let k = case.k();
    let dy = grid.dy();
    2.0 + 2.0 * grid.gamma() - k * k * dy * dy * case.eta(grid.x(j), grid.y(level))
}

/// Level matrix `A_ℓ`: tridiagonal `(γ, -Λ_j, γ)` in the interior, with the
/// one-sided second-order stencil `(-Λ+4γ, -5γ, 4γ, -γ)` in the first row and
/// its mirror in the last row.
///
/// Stored banded: the diagonal `-Λ_j` plus the scalar `γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMatrix {
    level: usize,
    gamma: f64,
    lambda: Vec<f64>,
}

impl LevelMatrix {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn size(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Entry `(row, col)` of the level matrix.
    pub fn get(&self, row: usize, col: usize) -> f64 {
        let n = self.size();
        let g = self.gamma;
        let last = n - 1;
        if row == 0 {
            match col {
                0 => -self.lambda[0] + 4.0 * g,
                1 => -5.0 * g,
                2 => 4.0 * g,
                3 => -g,
                _ => 0.0,
            }
        } else if row == last {
            if col > last {
                return 0.0;
            }
            match last - col {
                0 => -self.lambda[last] + 4.0 * g,
                1 => -5.0 * g,
                2 => 4.0 * g,
                3 => -g,
                _ => 0.0,
            }
        } else if col == row {
            -self.lambda[row]
        } else if col + 1 == row || col == row + 1 {
            g
        } else {
            0.0
        }
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        (0..n).map(|r| (0..n).map(|c| self.get(r, c)).collect()).collect()
    }

    /// `out += A_ℓ · u`.
    pub fn apply_add(&self, u: &[f64], out: &mut [f64]) {
        let n = self.size();
        let g = self.gamma;
        let l = &self.lambda;
        out[0] += (-l[0] + 4.0 * g) * u[0] - 5.0 * g * u[1] + 4.0 * g * u[2] - g * u[3];
        for j in 1..n - 1 {
            out[j] += g * (u[j - 1] + u[j + 1]) - l[j] * u[j];
        }
        let e = n - 1;
        out[e] += (-l[e] + 4.0 * g) * u[e] - 5.0 * g * u[e - 1] + 4.0 * g * u[e - 2] - g * u[e - 3];
    }

    /// `out += A_ℓᵀ · v`.
    pub fn apply_transpose_add(&self, v: &[f64], out: &mut [f64]) {
        let n = self.size();
        let g = self.gamma;
        let l = &self.lambda;
        let e = n - 1;
        // first row scatters into columns 0..4
        out[0] += (-l[0] + 4.0 * g) * v[0];
        out[1] += -5.0 * g * v[0];
        out[2] += 4.0 * g * v[0];
        out[3] += -g * v[0];
        for j in 1..e {
            out[j - 1] += g * v[j];
            out[j] += -l[j] * v[j];
            out[j + 1] += g * v[j];
        }
        out[e] += (-l[e] + 4.0 * g) * v[e];
        out[e - 1] += -5.0 * g * v[e];
        out[e - 2] += 4.0 * g * v[e];
        out[e - 3] += -g * v[e];
    }
}

/// Builds `A_ℓ` for `ℓ ∈ 0 .. n_y - 1` (the last level `n_y - 1` has no
/// equation of its own).
pub fn assemble_level(grid: &Grid2D, case: &CauchyCase, level: usize) -> Result<LevelMatrix> {
    if level + 1 >= grid.ny() {
        return Err(Error::IndexOutOfRange {
            what: "level matrix",
            index: level,
            len: grid.ny() - 1,
        });
    }
    let lambda = (0..grid.nx()).map(|j| lambda_at(grid, case, j, level)).collect();
    Ok(LevelMatrix {
        level,
        gamma: grid.gamma(),
        lambda,
    })
}

/// Right-hand side `B` of `A U = B`, given (possibly noisy) boundary vectors
/// `g_vec = G` and `f_vec = F`.
pub fn assemble_rhs(grid: &Grid2D, case: &CauchyCase, g_vec: &[f64], f_vec: &[f64]) -> Result<Vec<f64>> {
    let nx = grid.nx();
    check_len("dirichlet vector", nx, g_vec.len())?;
    check_len("neumann vector", nx, f_vec.len())?;
    let dy = grid.dy();
    let dy2 = dy * dy;
    let mut b = vec![0.0; grid.len()];
    b[..nx].copy_from_slice(g_vec);
    for j in 0..nx {
        b[nx + j] = dy2 * case.source(grid.x(j), 0.0) + 2.0 * dy * f_vec[j];
    }
    for block in 2..grid.ny() {
        let y = grid.y(block - 1);
        for j in 0..nx {
            b[block * nx + j] = dy2 * case.source(grid.x(j), y);
        }
    }
    Ok(b)
}

/// The boundary vectors `(G, F)` sampled from the case data.
pub fn boundary_data(grid: &Grid2D, case: &CauchyCase) -> (Vec<f64>, Vec<f64>) {
    (
        grid.sample_line(|x| case.dirichlet(x)),
        grid.sample_line(|x| case.neumann(x)),
    )
}

/// Block system `A` kept as its `n_y - 1` level matrices plus the structural
/// identity blocks.
#[derive(Debug, Clone)]
pub struct ForwardSystem {
    grid: Grid2D,
    levels: Vec<LevelMatrix>,
}

impl ForwardSystem {
    pub fn assemble(grid: &Grid2D, case: &CauchyCase) -> Self {
        let levels = (0..grid.ny() - 1)
            .map(|l| assemble_level(grid, case, l).expect("level index in range"))
            .collect();
        Self { grid: *grid, levels }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn levels(&self) -> &[LevelMatrix] {
        &self.levels
    }

    pub fn size(&self) -> usize {
        self.grid.len()
    }

    /// Right-hand side for this system.
    pub fn rhs(&self, case: &CauchyCase, g_vec: &[f64], f_vec: &[f64]) -> Result<Vec<f64>> {
        assemble_rhs(&self.grid, case, g_vec, f_vec)
    }

    /// `A · u` using the block structure.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        check_len("state vector", self.size(), u.len())?;
        let mut out = vec![0.0; u.len()];
        self.apply_into(u, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, u: &[f64], out: &mut [f64]) {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let block = |m: usize| m * nx..(m + 1) * nx;
        out[..nx].copy_from_slice(&u[..nx]);
        {
            let (o, r) = (block(1), block(0));
            for j in 0..nx {
                out[o.start + j] = 2.0 * u[o.start + j];
            }
            self.levels[0].apply_add(&u[r], &mut out[o]);
        }
        for m in 2..ny {
            let o = block(m);
            for j in 0..nx {
                out[o.start + j] = u[o.start + j] + u[(m - 2) * nx + j];
            }
            self.levels[m - 1].apply_add(&u[block(m - 1)], &mut out[o]);
        }
    }

    /// `Aᵀ · v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_len("residual vector", self.size(), v.len())?;
        let mut out = vec![0.0; v.len()];
        self.apply_transpose_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_transpose_into(&self, v: &[f64], out: &mut [f64]) {
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        for k in 0..ny {
            let diag = if k == 1 { 2.0 } else { 1.0 };
            let o = k * nx..(k + 1) * nx;
            for j in 0..nx {
                out[o.start + j] = diag * v[o.start + j];
            }
            if k + 2 < ny {
                for j in 0..nx {
                    out[o.start + j] += v[(k + 2) * nx + j];
                }
            }
            if k + 1 < ny {
                self.levels[k].apply_transpose_add(&v[(k + 1) * nx..(k + 2) * nx], &mut out[o]);
            }
        }
    }

    /// Solves `A U = rhs` exactly by marching upward one level at a time.
    ///
    /// This is the unregularized reconstruction; it amplifies data noise
    /// exponentially with depth.
    pub fn march_solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        check_len("right-hand side", self.size(), rhs.len())?;
        let nx = self.grid.nx();
        let ny = self.grid.ny();
        let mut u = vec![0.0; rhs.len()];
        u[..nx].copy_from_slice(&rhs[..nx]);
        let mut work = vec![0.0; nx];
        self.levels[0].apply_add(&u[..nx], &mut work);
        for j in 0..nx {
            u[nx + j] = 0.5 * (rhs[nx + j] - work[j]);
        }
        for m in 2..ny {
            work.iter_mut().for_each(|w| *w = 0.0);
            self.levels[m - 1].apply_add(&u[(m - 1) * nx..m * nx], &mut work);
            for j in 0..nx {
                u[m * nx + j] = rhs[m * nx + j] - work[j] - u[(m - 2) * nx + j];
            }
        }
        Ok(u)
    }
}

/// Residual of the exact solution in the interior equations (blocks `3..n_y`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationProbe {
    /// `‖A U_exact - B_exact‖_∞` over blocks `3..n_y`.
    pub residual_inf: f64,
    /// The same residual divided by `dy²`: the local truncation error of the
    /// difference scheme in PDE units, `O(dx² + dy²)`.
    pub truncation_inf: f64,
}

/// Samples the exact solution and measures how well it satisfies the
/// discrete interior equations.
pub fn truncation_residual(grid: &Grid2D, case: &CauchyCase) -> Result<TruncationProbe> {
    let exact = case.require_exact()?;
    let sys = ForwardSystem::assemble(grid, case);
    let u = grid.sample(|x, y| exact.value(x, y));
    let (g, f) = boundary_data(grid, case);
    let b = sys.rhs(case, &g, &f)?;
    let au = sys.apply(&u)?;
    let nx = grid.nx();
    let residual_inf = au[2 * nx..]
        .iter()
        .zip(&b[2 * nx..])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(TruncationProbe {
        residual_inf,
        truncation_inf: residual_inf / (grid.dy() * grid.dy()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{example1, example2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ex2_grid() -> (CauchyCase, Grid2D) {
        let case = example2();
        let grid = Grid2D::for_case(&case, 61, 41).unwrap();
        (case, grid)
    }

    #[test]
    fn lambda_values() {
        let (case, grid) = ex2_grid();
        assert!((lambda_coeff(&grid, &case, 7, 0).unwrap() - 2.499375).abs() < 1e-12);
        assert!((lambda_coeff(&grid, &case, 30, 40).unwrap() - 2.498750).abs() < 1e-12);
        assert!(lambda_coeff(&grid, &case, 61, 0).is_err());
        assert!(lambda_coeff(&grid, &case, 0, 41).is_err());

        let degenerate = example2().with_k(0.0).unwrap();
        let l = lambda_coeff(&grid, &degenerate, 3, 5).unwrap();
        assert_eq!(l, 2.0 + 2.0 * grid.gamma());
    }

    #[test]
    fn level_matrix_rows() {
        let (case, grid) = ex2_grid();
        let a = assemble_level(&grid, &case, 0).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() < 1e-12;
        assert!(close(a.get(5, 4), 0.25));
        assert!(close(a.get(5, 5), -2.499375));
        assert!(close(a.get(5, 6), 0.25));
        assert_eq!(a.get(5, 7), 0.0);
        let first: Vec<f64> = (0..5).map(|c| a.get(0, c)).collect();
        for (got, want) in first.iter().zip([-1.499375, -1.25, 1.0, -0.25, 0.0]) {
            assert!(close(*got, want), "{first:?}");
        }
        let n = grid.nx() - 1;
        let last: Vec<f64> = (0..5).map(|c| a.get(n, n - c)).collect();
        for (got, want) in last.iter().zip([-1.499375, -1.25, 1.0, -0.25, 0.0]) {
            assert!(close(*got, want), "{last:?}");
        }
        assert!(assemble_level(&grid, &case, grid.ny() - 1).is_err());
    }

    #[test]
    fn level_matrix_sparsity() {
        let (case, grid) = ex2_grid();
        let a = assemble_level(&grid, &case, 3).unwrap();
        let dense = a.to_dense();
        for (r, row) in dense.iter().enumerate().skip(1).take(grid.nx() - 2) {
            let nnz: Vec<usize> = row.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, _)| c).collect();
            assert_eq!(nnz, vec![r - 1, r, r + 1]);
        }
        // first row excluding the diagonal sums to -2γ
        let off: f64 = dense[0][1..].iter().sum();
        assert!((off + 2.0 * grid.gamma()).abs() < 1e-14);
    }

    #[test]
    fn constant_vector_row_sums() {
        let case = example1();
        let grid = Grid2D::for_case(&case, 21, 17).unwrap();
        for level in [0, 4, 15] {
            let a = assemble_level(&grid, &case, level).unwrap();
            let mut out = vec![0.0; grid.nx()];
            a.apply_add(&vec![1.0; grid.nx()], &mut out);
            for (j, v) in out.iter().enumerate() {
                let want = -a.lambda()[j] + 2.0 * grid.gamma();
                assert!((v - want).abs() < 1e-13, "row {j}: {v} vs {want}");
                let want_alt = -(2.0 - 9.0 * grid.dy().powi(2) * case.eta(grid.x(j), grid.y(level)));
                assert!((v - want_alt).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn banded_products_match_dense() {
        let case = example1();
        let grid = Grid2D::for_case(&case, 9, 5).unwrap();
        let a = assemble_level(&grid, &case, 2).unwrap();
        let dense = a.to_dense();
        let u: Vec<f64> = (0..9).map(|i| (i as f64 * 0.7).sin()).collect();
        let mut au = vec![0.0; 9];
        let mut atu = vec![0.0; 9];
        a.apply_add(&u, &mut au);
        a.apply_transpose_add(&u, &mut atu);
        for r in 0..9 {
            let row: f64 = (0..9).map(|c| dense[r][c] * u[c]).sum();
            let col: f64 = (0..9).map(|c| dense[c][r] * u[c]).sum();
            assert!((row - au[r]).abs() < 1e-13);
            assert!((col - atu[r]).abs() < 1e-13);
        }
    }

    #[test]
    fn rhs_blocks() {
        let (case, grid) = ex2_grid();
        let (g, f) = boundary_data(&grid, &case);
        let b = assemble_rhs(&grid, &case, &g, &f).unwrap();
        assert_eq!(&b[..grid.nx()], g.as_slice());
        let centre = grid.nx() + 30;
        assert!((grid.x(30)).abs() < 1e-15);
        assert!((b[centre] - 0.064_828_120_565_232_81).abs() < 1e-12);
        assert!(assemble_rhs(&grid, &case, &g[1..], &f).is_err());
    }

    #[test]
    fn rhs_zero_source() {
        let case = example2();
        let d = case.domain();
        let zero = crate::problem::CauchyCase::new(
            "zero",
            d,
            1.0,
            std::sync::Arc::new(|_, _| 1.0),
            std::sync::Arc::new(|_, _| 0.0),
            std::sync::Arc::new(|_| 0.0),
            std::sync::Arc::new(|x| x),
        )
        .unwrap();
        let grid = Grid2D::new(d, 11, 7).unwrap();
        let (g, f) = boundary_data(&grid, &zero);
        let b = assemble_rhs(&grid, &zero, &g, &f).unwrap();
        assert!(b[grid.nx()..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn forward_zero_and_identity_block() {
        let (case, grid) = ex2_grid();
        let sys = ForwardSystem::assemble(&grid, &case);
        let z = sys.apply(&vec![0.0; grid.len()]).unwrap();
        assert!(z.iter().all(|v| *v == 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let au = sys.apply(&u).unwrap();
        assert_eq!(&au[..grid.nx()], &u[..grid.nx()]);
        assert!(sys.apply(&u[1..]).is_err());
    }

    #[test]
    fn forward_is_block_lower_triangular() {
        let case = example1();
        let grid = Grid2D::for_case(&case, 11, 9).unwrap();
        let sys = ForwardSystem::assemble(&grid, &case);
        let nx = grid.nx();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>()).collect();
        let base = sys.apply(&u).unwrap();
        for m in 0..grid.ny() {
            let mut v = u.clone();
            for j in 0..nx {
                v[m * nx + j] += 1.0 + j as f64;
            }
            let out = sys.apply(&v).unwrap();
            for blk in 0..m {
                assert_eq!(&out[blk * nx..(blk + 1) * nx], &base[blk * nx..(blk + 1) * nx]);
            }
            assert_ne!(&out[m * nx..(m + 1) * nx], &base[m * nx..(m + 1) * nx]);
        }
    }

    #[test]
    fn transpose_is_adjoint() {
        let case = example1();
        let grid = Grid2D::for_case(&case, 13, 9).unwrap();
        let sys = ForwardSystem::assemble(&grid, &case);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let v: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let au = sys.apply(&u).unwrap();
        let atv = sys.apply_transpose(&v).unwrap();
        let lhs: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs: f64 = u.iter().zip(&atv).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    // The march amplifies rounding by roughly (1 + 2γ + 2sqrt(γ + γ²))^{n_y}, so the
    // round trip is only tight on shallow grids.
    #[test]
    fn march_inverts_forward() {
        let case = example2();
        let grid = Grid2D::for_case(&case, 21, 21).unwrap();
        let sys = ForwardSystem::assemble(&grid, &case);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u0: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let b = sys.apply(&u0).unwrap();
        let u = sys.march_solve(&b).unwrap();
        let err = u.iter().zip(&u0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = u0.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * norm, "relative error {}", err / norm);

        let r: Vec<f64> = (0..grid.len()).map(|_| rng.random::<f64>() - 0.5).collect();
        let back = sys.apply(&sys.march_solve(&r).unwrap()).unwrap();
        let err = back.iter().zip(&r).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = r.iter().map(|a| a * a).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * norm, "relative residual {}", err / norm);
    }

    #[test]
    fn unregularized_baseline_is_finite() {
        let case = example2();
        let grid = Grid2D::for_case(&case, 31, 21).unwrap();
        let sys = ForwardSystem::assemble(&grid, &case);
        let (g, f) = boundary_data(&grid, &case);
        let u = sys.march_solve(&sys.rhs(&case, &g, &f).unwrap()).unwrap();
        let exact = grid.sample(|x, y| case.exact().unwrap().value(x, y));
        let top = (grid.ny() - 1) * grid.nx();
        let num: f64 = u[top..].iter().zip(&exact[top..]).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = exact[top..].iter().map(|b| b * b).sum();
        let rel = (num / den).sqrt();
        assert!(rel.is_finite());
    }

    #[test]
    fn truncation_is_second_order() {
        for case in [example1(), example2()] {
            let coarse = Grid2D::for_case(&case, 31, 21).unwrap();
            let a = truncation_residual(&coarse, &case).unwrap();
            let b = truncation_residual(&coarse.refined(), &case).unwrap();
            let ratio = a.truncation_inf / b.truncation_inf;
            assert!((3.0..=5.0).contains(&ratio), "{}: ratio {ratio}", case.name());
        }
    }
}
