//! `phaselock` command-line front end.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{cmd_analyze, cmd_evolve, cmd_sweep, cmd_validate, Sink};
use crate::config::{Format, RunConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "phaselock",
    version,
    about = "Phase-locking analysis of φ' + sin φ = f(t) for periodic f"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `[output] dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Sweep worker threads; overrides `[sweep] workers`.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Seed of the randomized checks; overrides `[validate] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Format of tabular output.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify the regime of one bias and report its steady data.
    Analyze,
    /// Sweep the DC level and locate the phase-locking steps.
    Sweep,
    /// Reconstruct a solution period by period, with optional overlays.
    Evolve,
    /// Run the invariant checks.
    Validate,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = RunConfig::load(&path)?;
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        cfg.sweep.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.validate.seed = s;
    }
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
    let sink = Sink::new(cfg.output.dir.clone(), cfg.output.format)?;
    // The effective configuration, so that every output can be regenerated.
    sink.text("run_config.toml", &cfg.to_toml())?;
    match cli.command {
        Command::Analyze => cmd_analyze(&cfg, &sink).map(drop),
        Command::Sweep => cmd_sweep(&cfg, &sink).map(drop),
        Command::Evolve => cmd_evolve(&cfg, &sink).map(drop),
        Command::Validate => cmd_validate(&cfg, cfg.validate.seed, &sink).map(drop),
    }?;
    println!("output written to {}", sink.dir().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
