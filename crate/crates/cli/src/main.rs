//! `nclf`: train, evaluate and cross-validate three-way event models from a
//! TOML run config, reproduce the five-way benchmark table, and decompose
//! small cubical tensors.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 invalid config or input,
//! 3 model and dataset dimensions disagree.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Mismatch(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Mismatch(m) => write!(f, "dimension mismatch: {m}"),
            CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<nclf_core::Error> for CliError {
    fn from(e: nclf_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "nclf", version, about = "Non-commuting latent factor models for three-way events")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Print the effective configuration with all defaults filled in.
    Config(ConfigArg),
    /// Fit the configured model on the whole dataset.
    Train {
        #[command(flatten)]
        config: ConfigArg,
        /// Overrides output.model.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Overrides output.log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Score a saved model on the configured dataset.
    Evaluate {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Overrides output.metrics.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Pick λ on the selection folds, then measure on the measurement folds.
    Cv {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run the five benchmark models on MovieLens 1M and print the table.
    Reproduce(commands::ReproduceArgs),
    /// Read `n` and then n³ values from a file (`-` for stdin) and print the
    /// six symmetry components.
    Decompose {
        input: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Config(c) => commands::print_config(&c.config),
        Command::Train { config, model, log } => commands::train(&config.config, model, log),
        Command::Evaluate { config, model, metrics } => commands::evaluate(&config.config, model, metrics),
        Command::Cv { config, metrics, jobs } => commands::cv(&config.config, metrics, jobs),
        Command::Reproduce(args) => commands::reproduce(args),
        Command::Decompose { input } => commands::decompose(&input),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nclf: {e}");
            ExitCode::from(e.code())
        }
    }
}
