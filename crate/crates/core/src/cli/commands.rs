use std::fmt;

use crate::assembly::truncation_residual;
use crate::experiment::{run_sweeps, SweepReport, SLICE_DEPTHS};
use crate::mollifier::GaussianKernel;
use crate::problem::CauchyCase;
use crate::Grid2D;

use super::config::{ResolvedRun, RunConfig};
use super::output::{Cell, Csv, OutputSet};
use super::CliError;

/// Files produced by `run` plus the printed summary.
#[derive(Debug)]
pub struct RunOutcome {
    pub files: OutputSet,
    pub summary: String,
    pub reports: Vec<SweepReport>,
}

/// Runs one sweep per noise level and renders every report in memory.
/// Nothing is written here, so a failure leaves the output directory alone.
pub fn cmd_run(config: &RunConfig, verbose: bool) -> Result<RunOutcome, CliError> {
    let run = config.resolve()?;
    let noises: Vec<_> = run.noises.iter().copied().map(Some).collect();
    let reports = run_sweeps(&run.case, &run.grid, &noises, &run.alpha_grid, &run.options)?;

    let mut files = OutputSet::default();
    files.add("config.toml", run.config.to_toml());
    files.add("sweep.csv", sweep_csv(&reports).as_str());
    files.add("slices.csv", slices_csv(&reports).as_str());
    files.add("field.csv", field_csv(&run, &reports).as_str());
    let summary = summary_table(&run, &reports);
    files.add("summary.txt", summary.as_str());
    if verbose {
        files.add("solver.csv", solver_csv(&reports).as_str());
    }
    Ok(RunOutcome {
        files,
        summary,
        reports,
    })
}

fn red_of(r: &SweepReport) -> f64 {
    r.red.unwrap_or(0.0)
}

fn sweep_csv(reports: &[SweepReport]) -> Csv {
    let mut csv = Csv::new(&["red", "n", "alpha", "ratio", "global_error", "selected"]);
    for r in reports {
        for (i, &alpha) in r.alphas.iter().enumerate() {
            let ratio = r.selection.ratios.get(i).map_or(Cell::Empty, |&v| Cell::Num(v));
            let err = r.errors.as_ref().map_or(Cell::Empty, |e| Cell::Num(e[i]));
            let chosen = if i == r.selection.index() { "1" } else { "0" };
            csv.row(&[
                Cell::Num(red_of(r)),
                Cell::Int(i + 1),
                Cell::Num(alpha),
                ratio,
                err,
                Cell::Text(chosen),
            ]);
        }
    }
    csv
}

fn slices_csv(reports: &[SweepReport]) -> Csv {
    let mut csv = Csv::new(&["red", "y", "relative_error"]);
    for r in reports {
        for &(y, e) in r.slices.iter().flatten() {
            csv.row(&[Cell::Num(red_of(r)), Cell::Num(y), Cell::Num(e)]);
        }
    }
    csv
}

fn field_csv(run: &ResolvedRun, reports: &[SweepReport]) -> Csv {
    let grid = &run.grid;
    let exact = run.case.exact();
    let mut csv = Csv::new(&["red", "x", "y", "u_exact", "u_reconstructed"]);
    for r in reports {
        let u = r.selected();
        for n in 0..grid.ny() {
            for j in 0..grid.nx() {
                let (x, y) = (grid.x(j), grid.y(n));
                let ue = exact.map_or(Cell::Empty, |e| Cell::Num(e.value(x, y)));
                csv.row(&[Cell::Num(red_of(r)), Cell::Num(x), Cell::Num(y), ue, Cell::Num(u[grid.index(j, n)])]);
            }
        }
    }
    csv
}

fn solver_csv(reports: &[SweepReport]) -> Csv {
    let mut csv = Csv::new(&["red", "alpha", "iterations", "converged", "step", "rel_residual"]);
    for r in reports {
        for s in &r.stats {
            for (k, &res) in s.history.iter().enumerate() {
                csv.row(&[
                    Cell::Num(red_of(r)),
                    Cell::Num(s.alpha),
                    Cell::Int(s.iterations),
                    Cell::Text(if s.converged { "1" } else { "0" }),
                    Cell::Int(k),
                    Cell::Num(res),
                ]);
            }
        }
    }
    csv
}

fn summary_table(run: &ResolvedRun, reports: &[SweepReport]) -> String {
    use std::fmt::Write as _;
    let c = &run.config;
    let mut s = String::new();
    writeln!(
        s,
        "case {} on {} x {} nodes, seed {}, {} values of alpha from {:.4e} (q = {})",
        c.case,
        run.grid.nx(),
        run.grid.ny(),
        c.seed,
        run.alpha_grid.n0(),
        run.alpha_grid.alphas()[0],
        run.alpha_grid.q()
    )
    .unwrap();
    writeln!(s).unwrap();
    write!(s, "{:>8} {:>3} {:>10} {:>10} {:>10} {:>10}", "red", "n*", "alpha*", "global", "best", "march").unwrap();
    for y in SLICE_DEPTHS {
        write!(s, " {:>10}", format!("y={y}")).unwrap();
    }
    writeln!(s).unwrap();
    for r in reports {
        let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3e}"));
        write!(
            s,
            "{:>8} {:>3} {:>10.4e} {:>10} {:>10} {:>10}",
            red_of(r),
            r.selection.n_star,
            r.selection.alpha_star,
            fmt(r.selected_error()),
            fmt(r.best().map(|b| b.1)),
            fmt(r.march_error)
        )
        .unwrap();
        match &r.slices {
            Some(sl) => sl.iter().for_each(|(_, e)| write!(s, " {e:>10.3e}").unwrap()),
            None => SLICE_DEPTHS.iter().for_each(|_| write!(s, " {:>10}", "-").unwrap()),
        }
        writeln!(s).unwrap();
    }
    s
}

/// `kernel.csv` for the given values of α.
pub fn cmd_kernel(alphas: &[f64]) -> Result<OutputSet, CliError> {
    if alphas.is_empty() {
        return Err(CliError::Usage("kernel needs at least one value of alpha".into()));
    }
    let mut csv = Csv::new(&["alpha", "m_alpha", "M_alpha", "ratio_to_asymptote"]);
    for &a in alphas {
        let k = GaussianKernel::new(a)?;
        let (m, big_m) = k.lemma_bounds();
        csv.row(&[
            Cell::Num(a),
            Cell::Num(m),
            Cell::Num(big_m),
            Cell::Num(k.asymptote_ratio([1.0, 0.0])),
        ]);
    }
    let mut files = OutputSet::default();
    files.add("kernel.csv", csv.as_str());
    Ok(files)
}

/// Interior residual of the exact solution on a coarse and a fine grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyReport {
    pub case: String,
    pub coarse: (usize, usize),
    pub fine: (usize, usize),
    /// `‖A U_exact − B_exact‖_∞` on each grid.
    pub residual: (f64, f64),
    /// The same residuals divided by `dy²`.
    pub truncation: (f64, f64),
}

impl ConsistencyReport {
    /// Coarse-to-fine ratio of the truncation error; about 4 for a
    /// second-order scheme under halving.
    pub fn ratio(&self) -> f64 {
        self.truncation.0 / self.truncation.1
    }

    pub fn residual_ratio(&self) -> f64 {
        self.residual.0 / self.residual.1
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "case {}", self.case)?;
        writeln!(f, "{:>10} {:>14} {:>14}", "grid", "residual", "residual/dy^2")?;
        for ((nx, ny), r, t) in [
            (self.coarse, self.residual.0, self.truncation.0),
            (self.fine, self.residual.1, self.truncation.1),
        ] {
            writeln!(f, "{:>10} {:>14.6e} {:>14.6e}", format!("{nx}x{ny}"), r, t)?;
        }
        writeln!(f, "ratio {:.6} (residual {:.6})", self.ratio(), self.residual_ratio())
    }
}

pub fn cmd_consistency(
    case_name: &str,
    coarse: (usize, usize),
    fine: (usize, usize),
) -> Result<ConsistencyReport, CliError> {
    let case = CauchyCase::by_name(case_name)
        .ok_or_else(|| CliError::Config(format!("unknown case `{case_name}`")))?;
    let probe = |(nx, ny): (usize, usize)| -> Result<_, CliError> {
        Ok(truncation_residual(&Grid2D::for_case(&case, nx, ny)?, &case)?)
    };
    let c = probe(coarse)?;
    let f = probe(fine)?;
    Ok(ConsistencyReport {
        case: case_name.to_string(),
        coarse,
        fine,
        residual: (c.residual_inf, f.residual_inf),
        truncation: (c.truncation_inf, f.truncation_inf),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_table() {
        let files = cmd_kernel(&[1.0, 0.5, 0.1, 0.01]).unwrap();
        assert_eq!(files.names().collect::<Vec<_>>(), ["kernel.csv"]);
        assert!(cmd_kernel(&[]).is_err());
        assert_eq!(cmd_kernel(&[0.0]).unwrap_err().exit_code(), 1);
        assert_eq!(cmd_kernel(&[1.5]).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn consistency_identical_grids() {
        let r = cmd_consistency("example2", (31, 21), (31, 21)).unwrap();
        assert_eq!(r.ratio(), 1.0);
        assert!(cmd_consistency("nope", (31, 21), (61, 41)).is_err());
    }
}
