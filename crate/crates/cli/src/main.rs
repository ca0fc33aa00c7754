mod commands;
mod config;
mod data;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{json_lines, CliError};

/// Backtests search-volume trading rules and a walk-forward learner on
/// weekly data.
#[derive(Debug, Parser)]
#[command(name = "trendcheck", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the learner seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// t-stat distribution of the moving-average rule across keyword sets.
    NullCalibrate,
    /// t-stat against moving-average length for every keyword.
    KScan,
    /// Keyword and length averaged rule per keyword set.
    Ensemble,
    /// Walk-forward tree ensemble per feature mode.
    Learner,
    /// Stitch overlapping search-volume windows.
    Stitch,
}

fn run(cli: Cli) -> Result<(), Vec<CliError>> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path).map_err(|e| vec![e])?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.walk_forward.seed = seed;
    }
    if let Some(dir) = cli.output {
        cfg.output_dir = dir;
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| vec![CliError::Config(format!("thread pool: {e}"))])?;
    }
    match cli.command {
        Command::NullCalibrate => commands::null_calibrate(&cfg),
        Command::KScan => commands::k_scan_cmd(&cfg),
        Command::Ensemble => commands::ensemble(&cfg),
        Command::Learner => commands::learner(&cfg),
        Command::Stitch => commands::stitch(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(errors) => {
            eprint!("{}", json_lines(&errors));
            ExitCode::FAILURE
        }
    }
}
