//! Experiment runner: every verification is a subcommand writing CSV/JSON
//! artifacts and returning a meaningful exit code.
//!
//! Exit codes: 0 pass, 1 statistical failure, 2 validation/usage error,
//! 3 runtime error (e.g. a stopping-time budget ran out).

mod commands;
mod config;
mod report;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, RawConfig};

pub const VERSION: &str = env!("RAYKNIGHT_VERSION");

#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            exit: 2,
        }
    }

    pub fn stat_failure(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            exit: 1,
        }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            exit: 3,
        }
    }
}

impl From<rayknight::Error> for CliError {
    fn from(e: rayknight::Error) -> Self {
        use rayknight::Error::*;
        match e {
            InvalidInput(_) | InsufficientSamples { .. } => CliError::usage(e.to_string()),
            _ => CliError::runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(format!("i/o error: {e}"))
    }
}

/// Flag-level overrides mirroring the config keys.
#[derive(Debug, Clone, Default, Parser)]
pub struct Overrides {
    /// Growth rate of both sides.
    #[arg(long)]
    pub theta: Option<f64>,
    /// Competition rate of both sides.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Mass-side competition rate (negative-control knob).
    #[arg(long)]
    pub gamma_mass: Option<f64>,
    /// Initial masses, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    /// Probe times/levels, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub t: Option<Vec<f64>>,
    #[arg(long)]
    pub n_paths: Option<usize>,
    #[arg(long)]
    pub master_seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Kernel width in units of sqrt(dt).
    #[arg(long)]
    pub epsilon_factor: Option<f64>,
    /// Path-time budget for stopping-time searches.
    #[arg(long)]
    pub s_max: Option<f64>,
    /// Mass-side extinction horizon.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Upper reflection level (omit for unbounded runs).
    #[arg(long)]
    pub ceiling: Option<f64>,
    /// Output directory (also RAYKNIGHT_OUT_DIR).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads, 0 = all cores (also RAYKNIGHT_WORKERS).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Emit SVG overlay plots alongside the reports.
    #[arg(long, default_value_t = false)]
    pub plots: bool,
}

#[derive(Parser)]
#[command(name = "rayknight", version = VERSION, about = "Monte Carlo checks for the local-time representation of logistic branching diffusions")]
struct Cli {
    /// TOML configuration file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: mass-process ensembles vs local-time profiles over
    /// the (x, t) grid, plus the stopping-time/total-mass comparison.
    VerifyTheorem,
    /// One named check: chapman-kolmogorov, delmas-chop, comparison,
    /// rayleigh, girsanov-unit-mean, occupation, tanaka, sx-identity,
    /// monotone-field.
    VerifyLemma { name: String },
    /// Error-vs-resolution tables and fitted convergence orders.
    ConvergenceStudy,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let raw = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    let cfg = Config::resolve(&raw, &cli.overrides)?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    rayknight::ensemble::with_workers(cfg.workers, || match &cli.command {
        Command::VerifyTheorem => commands::theorem::run(&cfg),
        Command::VerifyLemma { name } => commands::lemma::run(&cfg, name),
        Command::ConvergenceStudy => commands::convergence::run(&cfg),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit)
        }
    }
}
