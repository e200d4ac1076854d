//! `kawasaki`: batch driver for schedules, simulations, hierarchy runs and
//! property checks.

mod artifacts;
mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "kawasaki", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `outputs.directory`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed (overrides `dynamics.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replica and operator parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override any configuration key, e.g. `--set hierarchy.dt=0.005`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the scale ladder and its norm certificates.
    Schedule,
    /// Run the particle simulation and check the moment bounds.
    Simulate,
    /// Integrate the lattice correlation hierarchy.
    Hierarchy,
    /// Run the property suites.
    Validate,
}

fn run(cli: Cli) -> CliResult<()> {
    let mut overrides = cli.overrides;
    if let Some(seed) = cli.seed {
        overrides.push(format!("dynamics.seed={seed}"));
    }
    if let Some(out) = &cli.out {
        overrides.push(format!("outputs.directory={:?}", out.display().to_string()));
    }
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    std::fs::create_dir_all(&cfg.outputs.directory)?;
    match cli.command {
        Command::Schedule => commands::schedule::run(&cfg),
        Command::Simulate => commands::simulate::run(&cfg),
        Command::Hierarchy => commands::hierarchy::run(&cfg),
        Command::Validate => commands::validate::run(&cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
