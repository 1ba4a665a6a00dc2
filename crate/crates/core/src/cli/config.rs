use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::experiment::{
    default_ghost, AlphaGrid, NoiseSpec, SolveMethod, SolverOptions, SweepOptions, DEFAULT_ALPHA0_PER_STEP,
    DEFAULT_N0, DEFAULT_Q,
};
use crate::mollifier::PenaltyWindow;
use crate::problem::CauchyCase;
use crate::Grid2D;

use super::CliError;

/// Run configuration as read from TOML. Optional fields are resolved against
/// the grid by [`RunConfig::resolve`]; the echo written next to the outputs
/// has every field filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_case")]
    pub case: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub alpha: AlphaConfig,
    #[serde(default)]
    pub regularizer: RegularizerConfig,
    #[serde(default)]
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// Target relative data errors, one sweep each.
    pub levels: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    /// Defaults to `0.3 · min(dx, dy)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha0: Option<f64>,
    pub q: f64,
    pub n0: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegularizerConfig {
    /// Ghost layers per side; defaults to `max(4, ceil(4 α_max / h))`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghost: Option<usize>,
    pub taper_width: usize,
    pub window: WindowName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowName {
    Valid,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub method: MethodName,
    pub tol: f64,
    /// Defaults to five times the number of unknowns.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Direct,
    Refined,
    Iterative,
}

fn default_case() -> String {
    "example2".into()
}

fn default_seed() -> u64 {
    1
}

fn default_output() -> PathBuf {
    "out".into()
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nx: 41, ny: 41 }
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            levels: vec![1e-2, 1e-3, 1e-4],
        }
    }
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self {
            alpha0: None,
            q: DEFAULT_Q,
            n0: DEFAULT_N0,
        }
    }
}

impl Default for RegularizerConfig {
    fn default() -> Self {
        Self {
            ghost: None,
            taper_width: 0,
            window: WindowName::Valid,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            method: match d.method {
                SolveMethod::Direct => MethodName::Direct,
                SolveMethod::Refined => MethodName::Refined,
                SolveMethod::Iterative => MethodName::Iterative,
            },
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: default_case(),
            seed: default_seed(),
            output: default_output(),
            grid: GridConfig::default(),
            noise: NoiseConfig::default(),
            alpha: AlphaConfig::default(),
            regularizer: RegularizerConfig::default(),
            solver: SolverConfig::default(),
        }
    }
}

/// A validated configuration with every default made explicit.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub case: CauchyCase,
    pub grid: Grid2D,
    pub alpha_grid: AlphaGrid,
    pub noises: Vec<NoiseSpec>,
    pub options: SweepOptions,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.message().trim().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks every value and fills in the grid-dependent defaults.
    pub fn resolve(&self) -> Result<ResolvedRun, CliError> {
        let case = CauchyCase::by_name(&self.case)
            .ok_or_else(|| CliError::Config(format!("unknown case `{}` (expected example1 or example2)", self.case)))?;
        let grid = Grid2D::for_case(&case, self.grid.nx, self.grid.ny)?;
        if self.noise.levels.is_empty() {
            return Err(CliError::Config("noise.levels must not be empty".into()));
        }
        let noises = self
            .noise
            .levels
            .iter()
            .map(|&red| NoiseSpec::new(red, self.seed))
            .collect::<crate::Result<Vec<_>>>()?;

        let alpha0 = self
            .alpha
            .alpha0
            .unwrap_or(DEFAULT_ALPHA0_PER_STEP * grid.dx().min(grid.dy()));
        let alpha_grid = AlphaGrid::new(alpha0, self.alpha.q, self.alpha.n0)?;
        let ghost = self
            .regularizer
            .ghost
            .unwrap_or_else(|| default_ghost(&grid, alpha_grid.alphas()[0]));
        if !(self.solver.tol > 0.0 && self.solver.tol < 1.0) {
            return Err(CliError::Config(format!("solver.tol = {} is outside (0, 1)", self.solver.tol)));
        }
        let max_iter = self.solver.max_iter.unwrap_or(5 * grid.len());
        if max_iter == 0 {
            return Err(CliError::Config("solver.max_iter must be positive".into()));
        }

        let options = SweepOptions {
            ghost: Some(ghost),
            taper_width: self.regularizer.taper_width,
            window: match self.regularizer.window {
                WindowName::Valid => PenaltyWindow::Valid,
                WindowName::Full => PenaltyWindow::Full,
            },
            solver: SolverOptions {
                method: match self.solver.method {
                    MethodName::Direct => SolveMethod::Direct,
                    MethodName::Refined => SolveMethod::Refined,
                    MethodName::Iterative => SolveMethod::Iterative,
                },
                tol: self.solver.tol,
                max_iter: Some(max_iter),
            },
        };
        // surface ghost/taper/kernel problems before any work starts
        let egrid = crate::mollifier::ExtendedGrid::new(grid, ghost, options.taper_width)?;
        crate::mollifier::build_convolution(&crate::mollifier::GaussianKernel::new(alpha_grid.alphas()[0])?, &egrid)?;

        let mut config = self.clone();
        config.alpha.alpha0 = Some(alpha0);
        config.regularizer.ghost = Some(ghost);
        config.solver.max_iter = Some(max_iter);
        Ok(ResolvedRun {
            config,
            case,
            grid,
            alpha_grid,
            noises,
            options,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("cas = \"example1\"").is_err());
        assert!(RunConfig::from_toml("[grid]\nnx = 41\nny = 41\nnz = 3").is_err());
    }

    #[test]
    fn echo_is_complete_and_stable() {
        let r = RunConfig::default().resolve().unwrap();
        let echo = r.config.to_toml();
        assert!(echo.contains("alpha0") && echo.contains("ghost") && echo.contains("max_iter"));
        let again = RunConfig::from_toml(&echo).unwrap();
        assert_eq!(again, r.config);
        assert_eq!(again.resolve().unwrap().config, r.config);
    }

    #[test]
    fn invalid_values() {
        let bad = [
            RunConfig {
                case: "example3".into(),
                ..Default::default()
            },
            RunConfig {
                noise: NoiseConfig { levels: vec![] },
                ..Default::default()
            },
            RunConfig {
                noise: NoiseConfig { levels: vec![1.5] },
                ..Default::default()
            },
            RunConfig {
                alpha: AlphaConfig {
                    q: 1.2,
                    ..Default::default()
                },
                ..Default::default()
            },
            RunConfig {
                grid: GridConfig { nx: 3, ny: 41 },
                ..Default::default()
            },
        ];
        for c in bad {
            assert!(c.resolve().is_err(), "{c:?}");
        }
    }
}

