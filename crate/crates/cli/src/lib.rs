//! Batch runner for `vrprox` experiments.
//!
//! A TOML file describes the model, the space and a list of runs. `run` executes
//! them and writes per-run trajectories and plot tables plus `summary.json`.
//! `probes` executes only the property-check runs and writes `probes.json`.
//! See `docs/config.md` for the schema.

pub mod config;
pub mod error;
pub mod expr;
pub mod output;
pub mod runner;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::CliError;
pub use runner::{execute, Outcome, Overrides};

#[derive(Debug, Parser)]
#[command(
    name = "vrprox",
    version,
    about = "Run proximal worthwhile-change experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Override the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Override the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Number of runs executed in parallel.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute every run and write outputs.
    Run { config: PathBuf },
    /// Parse and check the config without running anything.
    Validate { config: PathBuf },
    /// Execute only the probe runs (a default probe run if there are none).
    Probes { config: PathBuf },
}

/// Runs the parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let overrides = Overrides {
        seed: cli.seed,
        output_dir: cli.out,
        jobs: cli.jobs,
    };
    let (path, probes_only) = match &cli.command {
        Command::Validate { config } => {
            return match ExperimentConfig::load(config).and_then(|c| c.validate()) {
                Ok(()) => {
                    println!("{}: ok", config.display());
                    0
                }
                Err(e) => report(e),
            };
        }
        Command::Run { config } => (config, false),
        Command::Probes { config } => (config, true),
    };
    let result = ExperimentConfig::load(path).and_then(|c| execute(c, &overrides, probes_only));
    match result {
        Ok(outcome) => {
            for run in &outcome.failed_runs {
                eprintln!("run failed: {run} (see summary.json)");
            }
            for check in &outcome.failed_checks {
                eprintln!("check failed: {check}");
            }
            println!("outputs written to {}", outcome.output_dir.display());
            outcome.exit_code()
        }
        Err(e) => report(e),
    }
}

fn report(e: CliError) -> i32 {
    eprintln!("error: {e}");
    e.exit_code()
}
