//! Noisy data, α-sweeps, the quasi-optimality-type selection rule and error
//! metrics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::assembly::{boundary_data, ForwardSystem};
use crate::error::{check_len, invalid, Error, Result};
use crate::grid::Grid2D;
use crate::mollifier::{build_penalty_with, ExtendedGrid, GaussianKernel, PenaltyWindow};
use crate::problem::CauchyCase;
use crate::solver::{forward_gram, solve_spd, DirectSolver, NormalSystem};

/// Depths at which slice errors are reported.
pub const SLICE_DEPTHS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

/// Target relative data error and the seed of the noise generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    target_red: f64,
    seed: u64,
}

impl NoiseSpec {
    /// `target_red` must lie in `(0, 1)`; use no noise at all for exact data.
    pub fn new(target_red: f64, seed: u64) -> Result<Self> {
        if !(target_red > 0.0 && target_red < 1.0) {
            return Err(invalid("target_red", format!("{target_red} is outside (0, 1)")));
        }
        Ok(Self { target_red, seed })
    }

    pub fn target_red(&self) -> f64 {
        self.target_red
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Boundary data after [`add_noise`].
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyData {
    pub g: Vec<f64>,
    pub f: Vec<f64>,
    pub eps_g: f64,
    pub eps_f: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `G_ε = G + ε_g ϑ_g`, `F_ε = F + ε_f ϑ_f` with standard normal `ϑ_g`, `ϑ_f`
/// drawn in that order from a ChaCha8 stream seeded with `spec.seed()`.
///
/// Each `ε` is calibrated so that `‖G_ε - G‖ / ‖G‖` and `‖F_ε - F‖ / ‖F‖`
/// equal the target exactly (up to rounding).
pub fn add_noise(g: &[f64], f: &[f64], spec: &NoiseSpec) -> Result<NoisyData> {
    let (gn, fn_) = (norm(g), norm(f));
    if gn == 0.0 {
        return Err(Error::ZeroNorm("dirichlet data"));
    }
    if fn_ == 0.0 {
        return Err(Error::ZeroNorm("neumann data"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let tg = draw(g.len());
    let tf = draw(f.len());
    let eps_g = spec.target_red * gn / norm(&tg);
    let eps_f = spec.target_red * fn_ / norm(&tf);
    Ok(NoisyData {
        g: g.iter().zip(&tg).map(|(a, t)| a + eps_g * t).collect(),
        f: f.iter().zip(&tf).map(|(a, t)| a + eps_f * t).collect(),
        eps_g,
        eps_f,
    })
}

/// `‖noisy - clean‖ / ‖clean‖`.
pub fn relative_data_error(clean: &[f64], noisy: &[f64]) -> f64 {
    let d: Vec<f64> = clean.iter().zip(noisy).map(|(a, b)| a - b).collect();
    norm(&d) / norm(clean)
}

/// Geometric grid `α_n = α₀ qⁿ`, `n = 1 ..= N₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaGrid {
    alpha0: f64,
    q: f64,
    n0: usize,
}

/// Default `α₀` as a multiple of the finer mesh step.
pub const DEFAULT_ALPHA0_PER_STEP: f64 = 0.3;
pub const DEFAULT_Q: f64 = 0.933;
pub const DEFAULT_N0: usize = 10;

impl AlphaGrid {
    pub fn new(alpha0: f64, q: f64, n0: usize) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(invalid("alpha0", format!("{alpha0} must be positive")));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid("q", format!("{q} is outside (0, 1)")));
        }
        if n0 < 2 {
            return Err(invalid("n0", format!("need at least 2 values, got {n0}")));
        }
        Ok(Self { alpha0, q, n0 })
    }

    /// Grid scaled to the mesh: `α₀ = 0.3 · min(dx, dy)`, `q = 0.933`,
    /// `N₀ = 10`, so that `α` runs from about `0.28 h` down to `0.15 h`.
    ///
    /// The discrete penalty is not scaled by the cell area, so its strength
    /// depends on `α` only through `α / h`: below `h/8` the convolution is the
    /// identity and the penalty vanishes; above `h/2` it dominates the data.
    pub fn for_grid(grid: &Grid2D) -> Self {
        let h = grid.dx().min(grid.dy());
        Self::new(DEFAULT_ALPHA0_PER_STEP * h, DEFAULT_Q, DEFAULT_N0).expect("default grid is valid")
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn alphas(&self) -> Vec<f64> {
        (1..=self.n0).map(|n| self.alpha0 * self.q.powi(n as i32)).collect()
    }
}

/// Outcome of [`select_alpha`].
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// 1-based index `n*` into the α-grid.
    pub n_star: usize,
    pub alpha_star: f64,
    /// `‖U_n - U_{n+1}‖ / (α_n - α_{n+1})` for `n = 1 .. N₀ - 1`.
    pub ratios: Vec<f64>,
}

impl Selection {
    /// 0-based position of the selected solution.
    pub fn index(&self) -> usize {
        self.n_star - 1
    }
}

/// `n* = argmin_n ‖U_n - U_{n+1}‖ / (α_n - α_{n+1})` over consecutive pairs,
/// ties going to the larger `α`. NaN ratios never win.
pub fn select_alpha(alphas: &[f64], solutions: &[Vec<f64>]) -> Result<Selection> {
    check_len("solutions per alpha", alphas.len(), solutions.len())?;
    if alphas.len() < 2 {
        return Err(Error::TooFewSolutions(alphas.len()));
    }
    if alphas.windows(2).any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Greater)) {
        return Err(invalid("alphas", "must be strictly decreasing"));
    }
    let ratios: Vec<f64> = (0..alphas.len() - 1)
        .map(|n| {
            let d: Vec<f64> = solutions[n].iter().zip(&solutions[n + 1]).map(|(a, b)| a - b).collect();
            norm(&d) / (alphas[n] - alphas[n + 1])
        })
        .collect();
    let key = |r: f64| if r.is_nan() { f64::INFINITY } else { r };
    let mut best = 0;
    for (n, r) in ratios.iter().enumerate() {
        if key(*r) < key(ratios[best]) {
            best = n;
        }
    }
    Ok(Selection {
        n_star: best + 1,
        alpha_star: alphas[best],
        ratios,
    })
}

/// Relative Euclidean error on the grid level at depth `y`.
pub fn slice_error(u: &[f64], case: &CauchyCase, grid: &Grid2D, y: f64) -> Result<f64> {
    check_len("solution", grid.len(), u.len())?;
    let exact = case.require_exact()?;
    let n = grid.level_of(y)?;
    let yn = grid.y(n);
    let row = &u[n * grid.nx()..(n + 1) * grid.nx()];
    let want = grid.sample_line(|x| exact.value(x, yn));
    Ok(relative_data_error(&want, row))
}

/// Relative Euclidean error over the whole grid.
pub fn global_error(u: &[f64], case: &CauchyCase, grid: &Grid2D) -> Result<f64> {
    check_len("solution", grid.len(), u.len())?;
    let exact = case.require_exact()?;
    let want = grid.sample(|x, y| exact.value(x, y));
    Ok(relative_data_error(&want, u))
}

/// How each regularized system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Dense Cholesky, factorized once per α and shared by all noise levels.
    Direct,
    /// Direct solve followed by conjugate gradients started from it. `M` is
    /// far too ill-conditioned for conjugate gradients from zero, so this is
    /// the default.
    #[default]
    Refined,
    /// Conjugate gradients from zero on the matrix-free system.
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub method: SolveMethod,
    pub tol: f64,
    /// Defaults to five times the system size.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Refined,
            tol: 1e-10,
            max_iter: None,
        }
    }
}

/// Ghost band, cutoff and solver settings for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepOptions {
    /// Ghost layers per side; `None` uses [`default_ghost`].
    pub ghost: Option<usize>,
    pub taper_width: usize,
    pub window: PenaltyWindow,
    pub solver: SolverOptions,
}

/// `max(4, ceil(4 α_max / h))`, capped so the reflection stays inside the grid.
pub fn default_ghost(grid: &Grid2D, alpha_max: f64) -> usize {
    let h = grid.dx().min(grid.dy());
    let need = ((4.0 * alpha_max / h) - 1e-9).ceil().max(4.0) as usize;
    need.min((grid.nx().min(grid.ny()) - 1) / 2)
}

/// Per-solve diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub alpha: f64,
    pub iterations: usize,
    pub rel_residual: f64,
    pub converged: bool,
    pub history: Vec<f64>,
}

/// Everything recorded for one noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    /// Target relative data error, `None` for exact data.
    pub red: Option<f64>,
    pub eps_g: f64,
    pub eps_f: f64,
    pub alphas: Vec<f64>,
    pub solutions: Vec<Vec<f64>>,
    pub selection: Selection,
    pub stats: Vec<SolveStats>,
    /// Global relative error per α, when the case has an exact solution.
    pub errors: Option<Vec<f64>>,
    /// `(y, relative error)` of the selected solution.
    pub slices: Option<Vec<(f64, f64)>>,
    /// Global relative error of the unregularized march on the same data.
    pub march_error: Option<f64>,
}

impl SweepReport {
    pub fn selected(&self) -> &[f64] {
        &self.solutions[self.selection.index()]
    }

    pub fn selected_error(&self) -> Option<f64> {
        self.errors.as_ref().map(|e| e[self.selection.index()])
    }

    /// Smallest error over the sweep and its 0-based index.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.errors.as_ref().map(|e| {
            e.iter()
                .enumerate()
                .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc })
        })
    }
}

/// Sweep for a single noise level (`None` for exact data).
pub fn run_sweep(
    case: &CauchyCase,
    grid: &Grid2D,
    noise: Option<NoiseSpec>,
    agrid: &AlphaGrid,
    opts: &SweepOptions,
) -> Result<SweepReport> {
    Ok(run_sweeps(case, grid, &[noise], agrid, opts)?.remove(0))
}

/// Sweeps for several noise levels sharing the forward system, the penalties
/// and (for the direct path) one factorization per α. α values run in
/// parallel; results are gathered in grid order, so the output does not
/// depend on scheduling.
pub fn run_sweeps(
    case: &CauchyCase,
    grid: &Grid2D,
    noises: &[Option<NoiseSpec>],
    agrid: &AlphaGrid,
    opts: &SweepOptions,
) -> Result<Vec<SweepReport>> {
    let forward = ForwardSystem::assemble(grid, case);
    let (g, f) = boundary_data(grid, case);
    let data: Vec<(Option<f64>, NoisyData)> = noises
        .iter()
        .map(|spec| match spec {
            Some(s) => Ok((Some(s.target_red()), add_noise(&g, &f, s)?)),
            None => Ok((
                None,
                NoisyData {
                    g: g.clone(),
                    f: f.clone(),
                    eps_g: 0.0,
                    eps_f: 0.0,
                },
            )),
        })
        .collect::<Result<_>>()?;
    let rhs: Vec<Vec<f64>> = data
        .iter()
        .map(|(_, d)| forward.rhs(case, &d.g, &d.f))
        .collect::<Result<_>>()?;

    let alphas = agrid.alphas();
    let ghost = opts.ghost.unwrap_or_else(|| default_ghost(grid, alphas[0]));
    let egrid = ExtendedGrid::new(*grid, ghost, opts.taper_width)?;
    let gram = match opts.solver.method {
        SolveMethod::Iterative => None,
        _ => Some(forward_gram(&forward)),
    };
    let max_iter = opts.solver.max_iter.unwrap_or(5 * grid.len());

    // per α: one (solution, stats) per noise level
    let per_alpha: Vec<Vec<(Vec<f64>, SolveStats)>> = alphas
        .par_iter()
        .map(|&alpha| -> Result<Vec<(Vec<f64>, SolveStats)>> {
            let stack = build_penalty_with(&GaussianKernel::new(alpha)?, &egrid, opts.window)?;
            let direct = match &gram {
                Some(gm) => {
                    let mut m = gm.clone();
                    stack.add_into(&mut m);
                    Some(DirectSolver::factor(m)?)
                }
                None => None,
            };
            rhs.iter()
                .map(|b| {
                    let normal = crate::solver::assemble_normal(&forward, &stack, b)?;
                    solve_one(&normal, direct.as_ref(), alpha, opts.solver, max_iter)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut reports = Vec::with_capacity(data.len());
    for (k, (red, noisy)) in data.into_iter().enumerate() {
        let (solutions, stats): (Vec<Vec<f64>>, Vec<SolveStats>) =
            per_alpha.iter().map(|v| v[k].clone()).unzip();
        let selection = select_alpha(&alphas, &solutions)?;
        let (errors, slices, march_error) = if case.exact().is_some() {
            let errors = solutions
                .iter()
                .map(|u| global_error(u, case, grid))
                .collect::<Result<Vec<_>>>()?;
            let chosen = &solutions[selection.index()];
            let slices = SLICE_DEPTHS
                .iter()
                .map(|&y| Ok((y, slice_error(chosen, case, grid, y)?)))
                .collect::<Result<Vec<_>>>()?;
            let march = forward.march_solve(&rhs[k])?;
            (Some(errors), Some(slices), Some(global_error(&march, case, grid)?))
        } else {
            (None, None, None)
        };
        reports.push(SweepReport {
            red,
            eps_g: noisy.eps_g,
            eps_f: noisy.eps_f,
            alphas: alphas.clone(),
            solutions,
            selection,
            stats,
            errors,
            slices,
            march_error,
        });
    }
    Ok(reports)
}

fn solve_one(
    normal: &NormalSystem<'_>,
    direct: Option<&DirectSolver>,
    alpha: f64,
    opts: SolverOptions,
    max_iter: usize,
) -> Result<(Vec<f64>, SolveStats)> {
    let b = normal.rhs();
    let (u, stats) = match (opts.method, direct) {
        (SolveMethod::Direct, Some(d)) => {
            let (u, rel) = d.solve_unchecked(b)?;
            let stats = SolveStats {
                alpha,
                iterations: 0,
                rel_residual: rel,
                converged: rel <= crate::solver::DIRECT_RESIDUAL_LIMIT,
                history: vec![rel],
            };
            (u, stats)
        }
        (SolveMethod::Refined, Some(d)) => {
            let (guess, _) = d.solve_unchecked(b)?;
            let cg = solve_spd(normal, b, opts.tol, max_iter, Some(&guess))?;
            let stats = SolveStats {
                alpha,
                iterations: cg.iterations,
                rel_residual: cg.rel_residual,
                converged: cg.converged,
                history: cg.history,
            };
            (cg.solution, stats)
        }
        _ => {
            let cg = solve_spd(normal, b, opts.tol, max_iter, None)?;
            let stats = SolveStats {
                alpha,
                iterations: cg.iterations,
                rel_residual: cg.rel_residual,
                converged: cg.converged,
                history: cg.history,
            };
            (cg.solution, stats)
        }
    };
    Ok((u, stats))
}
