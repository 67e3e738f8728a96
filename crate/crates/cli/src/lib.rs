//! The `mmhp` command line: reproducible pipelines from simulation through
//! fitting, decoding, goodness of fit and dominance-hierarchy summaries.
//!
//! Every subcommand reads a JSON config (unknown keys are rejected) and
//! writes CSV tables and JSON summaries into an output directory. Outputs
//! depend only on the inputs and the seed.

use std::ffi::OsString;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod io;
pub mod svg;

pub use config::{
    CompareConfig, DecodeConfig, FitConfig, HierarchyConfig, RecoverConfig, SimulateConfig,
};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for invalid input, configs or usage.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for numerical failures during estimation or simulation.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] mmhp_core::Error),

    #[error("{path}: {source}")]
    Config {
        path: String,
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "mmhp", version, about = "Markov-modulated Hawkes process experiments")]
pub struct Cli {
    /// Worker threads for chains and replicates (defaults to all cores).
    #[arg(long, global = true, env = "MMHP_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate events and the latent path from known parameters.
    Simulate(commands::simulate::Args),
    /// Sample the posterior of the parameters by MCMC.
    Fit(commands::fit::Args),
    /// Decode the latent trajectory from posterior draws or fixed parameters.
    Decode(commands::decode::Args),
    /// Time-rescaling goodness of fit: KS test and QQ table.
    Gof(commands::gof::Args),
    /// Fit Poisson, Hawkes, MMPP and MMHP models and compare their KS statistics.
    Compare(commands::compare::Args),
    /// Win/loss matrices and hierarchy metrics, optionally split by latent state.
    Hierarchy(commands::hierarchy::Args),
    /// Simulation study: replicate, fit and report interval coverage.
    Recover(commands::recover::Args),
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be at least 1"));
        }
        // fails only if a pool already exists, e.g. on repeated in-process runs
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("global thread pool already initialized");
        }
    }
    match cli.command {
        Command::Simulate(a) => commands::simulate::run(&a),
        Command::Fit(a) => commands::fit::run(&a),
        Command::Decode(a) => commands::decode::run(&a),
        Command::Gof(a) => commands::gof::run(&a),
        Command::Compare(a) => commands::compare::run(&a),
        Command::Hierarchy(a) => commands::hierarchy::run(&a),
        Command::Recover(a) => commands::recover::run(&a),
    }
}
