//! Command-line front end: `run`, `kernel` and `consistency`.
//!
//! Exit codes are 0 on success, 1 for usage, configuration and I/O problems
//! and 2 when a numerical step fails.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::error::Error;

pub use commands::{cmd_consistency, cmd_kernel, cmd_run, ConsistencyReport, RunOutcome};
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Numerical(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDomain { .. }
            | Error::InvalidParameter { .. }
            | Error::GridTooSmall { .. }
            | Error::MissingExact(_)
            | Error::GhostBandTooDeep { .. }
            | Error::KernelTooWide { .. }
            | Error::SizeGuard { .. }
            | Error::OffGrid { .. } => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hcauchy", version, about = "Mollifier regularization for the Helmholtz Cauchy problem")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Noise seed (overrides the config).
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Worker threads for the α sweep.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Also write solver diagnostics.
    #[arg(long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep α for every noise level and write CSV reports.
    Run,
    /// Tabulate m_α, M_α and the small-α asymptote ratio.
    Kernel {
        /// Values of α in (0, 1].
        #[arg(value_delimiter = ',', allow_negative_numbers = true)]
        alphas: Vec<f64>,
    },
    /// Compare the residual of the exact solution on two grids.
    Consistency {
        #[arg(long, default_value = "example2")]
        case: String,
        /// Coarse grid as NXxNY.
        #[arg(long, default_value = "31x21", value_parser = parse_grid)]
        coarse: (usize, usize),
        /// Fine grid as NXxNY.
        #[arg(long, default_value = "61x41", value_parser = parse_grid)]
        fine: (usize, usize),
    },
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected NXxNY, got `{s}`"))?;
    let nx = a.trim().parse().map_err(|_| format!("bad n_x in `{s}`"))?;
    let ny = b.trim().parse().map_err(|_| format!("bad n_y in `{s}`"))?;
    Ok((nx, ny))
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr, reports to stdout.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    faer::set_global_parallelism(faer::Par::Seq);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;

    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.output = out.clone();
    }

    match &cli.command {
        Command::Run => {
            let outcome = pool.install(|| cmd_run(&config, cli.verbose))?;
            outcome.files.write(&config.output)?;
            print!("{}", outcome.summary);
        }
        Command::Kernel { alphas } => {
            let files = cmd_kernel(alphas)?;
            files.write(&config.output)?;
            for name in files.names() {
                println!("wrote {}", config.output.join(name).display());
            }
        }
        Command::Consistency { case, coarse, fine } => {
            let r = cmd_consistency(case, *coarse, *fine)?;
            if coarse == fine {
                eprintln!("warning: coarse and fine grids are identical");
            }
            print!("{r}");
        }
    }
    Ok(())
}
