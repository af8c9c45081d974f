//! `carnot`: runs one configured experiment and writes its artifacts into a
//! run directory.

use std::ffi::OsString;
use std::path::PathBuf;

use carnot_core::{CarnotError, CascadeMode};
use clap::error::ErrorKind;
use clap::Parser;
use thiserror::Error;

mod artifacts;
mod checks;
pub mod config;

pub use artifacts::{Artifacts, CsvTable};
pub use config::{Command, ExperimentConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(CarnotError),
    #[error("invariant violation: {0}")]
    Invariant(CarnotError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<CarnotError> for RunError {
    fn from(e: CarnotError) -> Self {
        use CarnotError::*;
        match e {
            DimensionMismatch { .. }
            | InvalidSpec(_)
            | InvalidParameter(_)
            | NonPositiveDilation(_)
            | UnknownGroup(_)
            | LevelOutOfRange { .. }
            | Json(_) => RunError::Config(e.to_string()),
            NotHarmonic { .. } | MeanValueViolation { .. } => RunError::Invariant(e),
            Io(e) => RunError::Io(e),
            _ => RunError::Solver(e),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Solver(_) => EXIT_SOLVER,
            RunError::Invariant(_) => EXIT_INVARIANT,
            RunError::Io(_) => EXIT_IO,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "carnot",
    version,
    about = "Regularity experiments for sub-Laplacians on Carnot groups"
)]
struct Cli {
    /// Check to run; may instead come from the config file.
    #[arg(value_enum)]
    command: Option<Command>,
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// h1 or engel.
    #[arg(long)]
    group: Option<String>,
    /// Test function, e.g. holder:0.5, lipschitz, log_dini, non_dini, constant:1.
    #[arg(long)]
    rhs: Option<String>,
    /// Nodes per axis.
    #[arg(long)]
    n: Option<usize>,
    /// Grid sizes of the refinement study, comma separated.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// manufactured or solved.
    #[arg(long)]
    mode: Option<String>,
    /// Base point of the translated cascade, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xi0: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve(cli: Cli) -> Result<ExperimentConfig, RunError> {
    let mut c = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if cli.command.is_some() {
        c.command = cli.command;
    }
    if let Some(v) = cli.group {
        c.group = v;
    }
    if let Some(v) = cli.rhs {
        c.rhs = v;
    }
    if let Some(v) = cli.n {
        c.n = v;
    }
    if let Some(v) = cli.sizes {
        c.grid_sizes = v;
    }
    if let Some(v) = cli.kmax {
        c.k_max = v;
    }
    if let Some(v) = cli.rho {
        c.rho = v;
    }
    if let Some(v) = cli.mode {
        c.mode = serde_json::from_value::<CascadeMode>(serde_json::Value::String(v.clone()))
            .map_err(|_| RunError::Config(format!("unknown mode `{v}` (expected manufactured or solved)")))?;
    }
    if cli.xi0.is_some() {
        c.xi0 = cli.xi0;
    }
    if let Some(v) = cli.seed {
        c.seed = v;
    }
    if let Some(v) = cli.trials {
        c.trials = v;
    }
    if let Some(v) = cli.pairs {
        c.pairs = v;
    }
    if let Some(v) = cli.out {
        c.out = v;
    }
    c.validate()?;
    Ok(c)
}

/// Exit code and summary lines of a finished run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: Vec<String>,
}

/// Runs the configured check and writes its artifacts. Nothing is written
/// on a config error or a solver failure.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    let mut a = Artifacts::new(config);
    match checks::dispatch(config, &mut a) {
        Ok(()) => {}
        Err(RunError::Invariant(e)) => a.violation("error", e.to_string()),
        Err(e) => return Err(e),
    }
    let exit_code = if a.has_violations() { EXIT_INVARIANT } else { EXIT_OK };
    let summary = a.write(&config.out, config, exit_code)?;
    Ok(RunOutcome { exit_code, summary })
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("carnot: {e}");
            return e.exit_code();
        }
    };
    match execute(&config) {
        Ok(outcome) => {
            for l in &outcome.summary {
                println!("{l}");
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("carnot: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_classes_map_to_distinct_codes() {
        let solver = RunError::from(CarnotError::SolverNonConvergence {
            iterations: 10,
            final_residual: 1.0,
            residual_history: vec![],
        });
        assert_eq!(solver.exit_code(), EXIT_SOLVER);
        assert_eq!(
            RunError::from(CarnotError::InvalidParameter("x".into())).exit_code(),
            EXIT_CONFIG
        );
        assert_eq!(
            RunError::from(CarnotError::NotHarmonic { residual: 1.0 }).exit_code(),
            EXIT_INVARIANT
        );
        assert_eq!(
            RunError::from(CarnotError::SingularSystem { pivot: 0 }).exit_code(),
            EXIT_SOLVER
        );
    }
}
