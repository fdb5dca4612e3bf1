mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gossicrypt::analysis::AnalysisError;
use gossicrypt::sim::SimError;
use thiserror::Error;

use commands::headers;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Options shared by every subcommand. Precedence, lowest first: built-in
/// defaults, `--config` file, `--set` overrides, `--seed`, then the
/// subcommand's own flags.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output format.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, short, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Parser)]
#[command(
    name = "gossicrypt",
    version,
    about = "Analyses and simulations of probabilistic en-route re-encryption"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary distribution of the number of correct nodes.
    #[command(after_help = headers::STATIONARY_HELP)]
    Stationary {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// P{Y > 0} over L = 5..12 and q = 0.5..0.9.
    #[command(after_help = headers::TABLE1_HELP)]
    Table1 {
        #[command(flatten)]
        common: Common,
    },
    /// P{Y > 0} for one path length and one or more q.
    #[command(after_help = headers::SUCCESS_HELP)]
    Success {
        #[arg(long)]
        l: Option<usize>,
        /// Comma-separated list.
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        /// Drop the no-re-encryption term from P{Y = 0}.
        #[arg(long)]
        eq4_literal: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Probability that k consecutive snapshots are all breached.
    #[command(after_help = headers::BREACH_HELP)]
    Breach {
        /// Single-snapshot breach probability. Derived from the model and the
        /// torus path-length distribution when omitted.
        #[arg(long)]
        f1: Option<f64>,
        /// Largest k.
        #[arg(long)]
        k: Option<u32>,
        /// Estimate F(k) by simulation.
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = 0)]
        source: u16,
        #[arg(long, default_value_t = 2)]
        collector: u16,
        #[command(flatten)]
        common: Common,
    },
    /// Energy comparison against per-message public-key encryption.
    #[command(after_help = headers::ENERGY_HELP)]
    Energy {
        /// Messages per key refresh.
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 10.0)]
        hops: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run one simulation and report its metrics.
    #[command(after_help = headers::SIMULATE_HELP)]
    Simulate {
        /// Also write every adversary intercept as CSV.
        #[arg(long, value_name = "PATH")]
        intercept_log: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write the CSV data behind every figure into a directory.
    #[command(after_help = headers::FIGURES_HELP)]
    Figures {
        #[arg(long, value_name = "DIR")]
        outdir: PathBuf,
        /// f1 for the analytical column of fig6.
        #[arg(long)]
        f1: Option<f64>,
        #[arg(long, default_value_t = 5)]
        k_max: u32,
        #[arg(long, default_value_t = 0)]
        source: u16,
        #[arg(long, default_value_t = 2)]
        collector: u16,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
