//! Command-line front end for `mimo-charexp`.
//!
//! Subcommands evaluate the closed forms (`mgf`, `ergodic`, `outage`,
//! `density`, `ustm`), run the Monte Carlo oracle (`simulate`), produce
//! parameter sweeps (`sweep`) and run the numeric validation suite
//! (`validate`). Every result is a CSV table whose first line records the
//! SHA-256 of the effective configuration and the seed; identical
//! configuration and seed give byte-identical output.
//!
//! Exit codes: `0` success, `1` a validation check failed, `2` configuration
//! or input error, `3` numerical non-convergence.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub mod channel;
pub mod config;
pub mod matfile;
pub mod report;
pub mod tasks;
pub mod validate;

use config::{Overrides, RunConfig};

/// Errors surfaced by the command-line tool.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or out-of-range configuration.
    #[error("configuration error: {0}")]
    Config(String),
    /// A referenced file could not be read or written.
    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    /// The library rejected an input (non-Hermitian matrix, divergent
    /// argument, …).
    #[error("invalid input: {0}")]
    Input(mimo_charexp::Error),
    /// An evaluation did not reach its accuracy target.
    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),
    /// At least one validation check failed (the report was written).
    #[error("{failed} of {total} validation checks failed")]
    ValidationFailed { failed: usize, total: usize },
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ValidationFailed { .. } => 1,
            CliError::Config(_) | CliError::Io { .. } | CliError::Input(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }

    /// Prefixes the message with where the failure happened.
    pub fn with_context(self, ctx: &str) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{ctx}: {m}")),
            CliError::NonConvergence(m) => CliError::NonConvergence(format!("{ctx}: {m}")),
            CliError::Input(e) => CliError::Config(format!("{ctx}: {e}")),
            other => other,
        }
    }
}

impl From<mimo_charexp::Error> for CliError {
    fn from(e: mimo_charexp::Error) -> Self {
        use mimo_charexp::Error as E;
        match e {
            E::NonConvergence(_) | E::QuadratureFailure { .. } => CliError::NonConvergence(e.to_string()),
            other => CliError::Input(other),
        }
    }
}

/// Exact mutual-information statistics of Gaussian MIMO channels.
#[derive(Debug, Parser)]
#[command(name = "mimo-charexp", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub shared: SharedArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags accepted by every subcommand.
#[derive(Debug, Clone, Args)]
pub struct SharedArgs {
    /// Configuration file (`key = value` lines with `[section]` headers).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Random seed for every Monte Carlo draw.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output CSV path (standard output when absent).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Multiplier on validation and quadrature tolerances.
    #[arg(long, global = true, value_name = "REAL")]
    pub tol: Option<f64>,
    /// Monte Carlo sample count.
    #[arg(long = "mc-n", global = true, value_name = "INT")]
    pub mc_n: Option<u64>,
    /// Report capacities in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
}

/// Subcommands.
#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Evaluate g(z) = E[det(I + G†G)^z] at the `[mgf] z` points.
    Mgf,
    /// Ergodic capacity E[I].
    Ergodic,
    /// Outage probability curve over the `[outage]` thresholds.
    Outage,
    /// Joint eigenvalue density on a λ grid.
    Density,
    /// Monte Carlo estimates of the `[simulate]` functionals.
    Simulate,
    /// Received-signal density of unitary space-time modulation.
    Ustm,
    /// Run the validation suite; exit 0 iff every check passes.
    Validate {
        /// Deliberately corrupt one computation (mutation testing).
        #[arg(long, hide = true, value_enum)]
        inject_fault: Option<Fault>,
    },
    /// Ergodic-capacity sweep over d_lambda, delta or snr.
    Sweep,
}

/// Faults the validation harness can inject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    /// Flip the sign prefactor of the densities under test.
    DensitySign,
}

/// Runs a parsed command line, writing the CSV to `--out` or stdout.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let overrides = Overrides {
        seed: cli.shared.seed,
        mc_n: cli.shared.mc_n,
        tol: cli.shared.tol,
        bits: cli.shared.bits,
    };
    let cfg = RunConfig::load(cli.shared.config.as_deref(), &overrides)?;
    let out = cli.shared.out.as_deref();
    let (table, outcome) = match &cli.command {
        Command::Mgf => (tasks::mgf(&cfg)?, Ok(())),
        Command::Ergodic => (tasks::ergodic(&cfg)?, Ok(())),
        Command::Outage => tasks::outage(&cfg)?,
        Command::Density => (tasks::density(&cfg)?, Ok(())),
        Command::Simulate => (tasks::simulate(&cfg)?, Ok(())),
        Command::Ustm => (tasks::ustm(&cfg)?, Ok(())),
        Command::Sweep => (tasks::sweep(&cfg)?, Ok(())),
        Command::Validate { inject_fault } => {
            let report = validate::run_suite(&cfg, *inject_fault);
            let outcome = report.outcome();
            (report.table(), outcome)
        }
    };
    report::emit(&table.render(&cfg.hash()?, cfg.run.seed), out)?;
    outcome
}
