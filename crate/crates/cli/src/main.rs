//! `sdstab` command-line front end.
//!
//! Exit codes: 0 success, 1 verification/classification/synthesis failure,
//! 2 I/O error, 3 precondition violation (invalid config or input).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Failure(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Io(_) => 2,
            CliError::Precondition(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sdstab", version, about = "Sampled-data stabilisation toolkit")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `simulation.seed` (and the verify sample seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `output.format`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Use the reversed bracket convention (test hook).
    #[arg(long, global = true, hide = true)]
    flip_bracket_sign: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compare symbolic brackets against the closed forms of the template.
    Verify {
        #[arg(long, default_value_t = 100)]
        points: usize,
    },
    /// Classify every point of the configured grid.
    Classify,
    /// Synthesise a decrease witness at `synth.x0`.
    Synth,
    /// Run one sampled-data closed loop from `simulation.x0`.
    Simulate,
    /// Closed loops from random states on each sphere `|x0| = δ`.
    Sweep,
    /// Print the effective configuration as TOML.
    Config,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = cli
        .config
        .ok_or_else(|| CliError::Precondition("--config is required".into()))?;
    let mut cfg = config::ScenarioConfig::load(&path)?;
    if let Some(seed) = cli.seed {
        cfg.simulation.seed = seed;
    }
    if let Some(dir) = cli.out {
        cfg.output.dir = dir;
    }
    if let Some(format) = cli.format {
        cfg.output.format = format;
    }
    let convention = if cli.flip_bracket_sign {
        sdstab::liealg::BracketConvention::Flipped
    } else {
        sdstab::liealg::BracketConvention::Standard
    };
    match cli.command {
        Command::Verify { points } => commands::verify(&cfg, convention, points),
        Command::Classify => commands::classify(&cfg, convention),
        Command::Synth => commands::synth(&cfg, convention),
        Command::Simulate => commands::simulate(&cfg, convention),
        Command::Sweep => commands::sweep(&cfg, convention),
        Command::Config => {
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sdstab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
