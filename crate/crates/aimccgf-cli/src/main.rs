//! `aimccgf`: command-line pipeline for hybrid coupled-cluster Green's
//! functions of the Anderson impurity model.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error,
//! 3 validation threshold exceeded, 4 solver did not converge.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::{Outcome, Overrides};
use crate::config::{Format, ModeName, RunConfig};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "aimccgf",
    version,
    about = "Hybrid coupled-cluster Green's functions for the Anderson impurity model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sampling seed; overrides `[measurement] seed`.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Shots per estimate; 0 selects exact evaluation.
    #[arg(long, value_name = "N")]
    shots: Option<u64>,
    /// Estimator; overrides `[measurement] mode`.
    #[arg(long, value_enum)]
    mode: Option<ModeName>,
    /// Output encoding; overrides `[output] format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the amplitude equations and write the amplitude report.
    SolveCc(Common),
    /// Evaluate G(t) on the evolution grid.
    Greens {
        #[command(flatten)]
        common: Common,
        /// Also write the Pauli-string expansions to lcu.txt.
        #[arg(long)]
        dump_lcu: bool,
    },
    /// Spectral function by FFT of G(t), with a plotting script.
    Spectrum(Common),
    /// Gate-count scaling estimates for every method.
    Resources(Common),
    /// Compare the exact-mode hybrid G(t) to exact diagonalization.
    Validate(Common),
    /// Trotter error against its commutator bound.
    TrotterRatio(Common),
}

fn write_outcome(dir: &std::path::Path, outcome: &Outcome) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for a in &outcome.artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes)?;
        println!("wrote {}", path.display());
    }
    println!("{}", outcome.summary);
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let (common, dump_lcu) = match &cli.command {
        Command::Greens { common, dump_lcu } => (common, *dump_lcu),
        Command::SolveCc(c)
        | Command::Spectrum(c)
        | Command::Resources(c)
        | Command::Validate(c)
        | Command::TrotterRatio(c) => (c, false),
    };
    let cfg = RunConfig::load(&common.config)?;
    let overrides = Overrides {
        seed: common.seed,
        shots: common.shots,
        mode: common.mode.map(Into::into),
        format: common.format,
    };
    let outcome = match &cli.command {
        Command::SolveCc(_) => commands::solve_cc(&cfg, &overrides)?,
        Command::Greens { .. } => commands::greens(&cfg, &overrides, dump_lcu)?,
        Command::Spectrum(_) => commands::spectrum(&cfg, &overrides)?,
        Command::Resources(_) => commands::resources(&cfg, &overrides)?,
        Command::Validate(_) => commands::validate(&cfg, &overrides)?,
        Command::TrotterRatio(_) => commands::trotter_ratio(&cfg, &overrides)?,
    };
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    write_outcome(&dir, &outcome)?;
    match outcome.failure {
        Some(message) => Err(CliError::Validation(message)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("aimccgf: {e}");
            e.exit_code()
        }
    }
}
