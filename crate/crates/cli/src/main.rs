//! percotree: analytics and Monte Carlo for fractal percolation driven by
//! tree-indexed Markov chains in varying environments.
//!
//! Exit codes: 0 success, 1 validation or input error, 2 budget error,
//! 64 usage error.

mod commands;
mod io;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use percotree::analytics::AnalyticsError;
use percotree::simulate::SimError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("invalid model: {0}")]
    Validation(String),
    #[error("{0}")]
    Analytics(#[from] AnalyticsError),
    #[error("{0}")]
    Sim(#[from] SimError),
    #[error("missing artifact: {0}")]
    MissingArtifact(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Sim(SimError::BudgetExceeded { .. }) => 2,
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Sim(SimError::BudgetExceeded { .. }) => "budget",
            CliError::Validation(_) => "validation",
            CliError::MissingArtifact(_) => "missing_artifact",
            _ => "error",
        }
    }
}

#[derive(Parser)]
#[command(
    name = "percotree",
    version,
    about = "Dimension thresholds, emptiness probabilities and Monte Carlo simulation \
             for random fractals driven by tree-indexed Markov chains",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model file against every invariant.
    Validate {
        #[arg(long)]
        model: String,
    },
    /// Compute the analytic report: threshold, extinction table, bounds,
    /// emptiness probability and criterion verdicts.
    Analyze {
        #[arg(long)]
        model: String,
        /// Largest generation for the diagnostic tables.
        #[arg(long, default_value_t = 20)]
        depth: usize,
        /// Root-finding tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Also report the finite-horizon evaluation of the averaged log
        /// Moran sum at the threshold exponent.
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo run: per-replica trajectories, truncated flows, and the
    /// frequency of dying out by the truncation depth.
    Simulate {
        #[arg(long)]
        model: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        /// Exponent for the flow and weighted-survivor columns.
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Box-counting regression of on-cube counts against scale.
    EstimateDim {
        #[arg(long)]
        model: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        replicas: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render one planar realization as a binary PGM raster.
    Render {
        #[arg(long)]
        model: String,
        #[arg(long)]
        depth: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge prior artifacts from an output directory into one consolidated
    /// document with cross-checks.
    Report {
        #[arg(long)]
        model: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Brute-force enumeration checks on tiny instances (debugging aid).
    #[command(hide = true)]
    Oracle {
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value_t = 0.0)]
        z: f64,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
    },
}

fn run(cli: Cli) -> Result<(String, bool), CliError> {
    match cli.command {
        Command::Validate { model } => commands::validate(&model),
        Command::Analyze {
            model,
            depth,
            tol,
            horizon,
            out,
        } => commands::analyze(&model, depth, tol, horizon, out.as_deref()).map(|j| (j, true)),
        Command::Simulate {
            model,
            depth,
            replicas,
            seed,
            s,
            workers,
            out,
        } => commands::simulate(&model, depth, replicas, seed, s, workers, out.as_deref())
            .map(|j| (j, true)),
        Command::EstimateDim {
            model,
            depth,
            replicas,
            seed,
            workers,
            out,
        } => commands::estimate_dim(&model, depth, replicas, seed, workers, out.as_deref())
            .map(|j| (j, true)),
        Command::Render {
            model,
            depth,
            seed,
            out,
        } => commands::render(&model, depth, seed, out.as_deref()).map(|j| (j, true)),
        Command::Report { model, out } => commands::report(&model, &out).map(|j| (j, true)),
        Command::Oracle { model, depth, z, s } => {
            commands::oracle_cmd(&model, depth, z, s).map(|j| (j, true))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // usage errors print the grammar and exit 64; --help and
            // --version are ordinary successes
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok((json, ok)) => {
            println!("{json}");
            ExitCode::from(if ok { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            let doc = serde_json::json!({ "error": e.to_string(), "kind": e.kind() });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            ExitCode::from(e.exit_code())
        }
    }
}
