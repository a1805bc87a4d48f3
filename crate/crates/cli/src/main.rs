//! `termfit`: ingest treasury auctions, fit Nelson-Siegel / Svensson
//! curves per date and compare the two models.
//!
//! Exit codes: 0 success, 2 invalid input or configuration, 3 calibration
//! failed for every date, 4 comparison preconditions not met.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunArgs;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "termfit", about = "Zero-curve bootstrapping and Nelson-Siegel / Svensson model selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate an auction CSV and write a normalized dataset
    Ingest(RunArgs),
    /// Bootstrap zero curves and calibrate the selected models per date
    Fit(RunArgs),
    /// Test the two models' fit errors and select one
    Compare(RunArgs),
    /// Write a synthetic auction CSV from noisy Nelson-Siegel curves
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        dates: usize,
        /// Noise added to each zero rate, percent
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
    },
    /// Print the version
    Version,
}

fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::validation(format!("thread pool: {e}")))?;
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Version => {
            println!("termfit {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
        Command::Synth { out, seed, dates, noise } => commands::synth(&out, seed, dates, noise),
        Command::Ingest(args) => commands::ingest(&args.resolve()?),
        Command::Fit(args) => {
            let cfg = args.resolve()?;
            configure_threads(cfg.threads)?;
            commands::fit(&cfg)
        }
        Command::Compare(args) => commands::compare(&args.resolve()?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
