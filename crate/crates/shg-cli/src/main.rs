//! Batch front end for the cavity second-harmonic pipeline.
//!
//! One job per invocation: `shg <command> [--config PATH] [--out DIR]
//! [--seed U64] [--threads N]`. Every command writes its data as CSV plus a
//! JSON manifest echoing the fully resolved configuration; re-running with
//! the emitted `resolved.toml` reproduces stochastic outputs bit-exactly.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 numeric or
//! validity error during computation, 4 self-check regression failure.

mod commands;
mod config;
mod manifest;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Failure classification mirrored into the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, flags, or unusable paths (exit 2).
    Config(String),
    /// Computation failed: numerics, physics validity, or I/O mid-run (exit 3).
    Run(String),
    /// A self-check band did not hold (exit 4).
    SelfCheck(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Run(m) => write!(f, "run error: {m}"),
            CliError::SelfCheck(m) => write!(f, "self-check failure: {m}"),
        }
    }
}

impl From<shg_core::Error> for CliError {
    fn from(e: shg_core::Error) -> Self {
        match e {
            shg_core::Error::InvalidParameter(_) | shg_core::Error::InvalidConfig(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Run(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "shg",
    version,
    about = "Steady states, instability thresholds, correlation spectra and \
             stochastic field simulation for intracavity second-harmonic generation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every command.
#[derive(Args, Clone, Default)]
pub struct CommonArgs {
    /// Configuration file (TOML: sections, key = value, '#' comments)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory (default: $SHG_OUT_ROOT/<command> or ./shg-out/<command>)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override the base RNG seed
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Cap the worker thread count
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Snapshot files to estimate from (overrides [analyze].inputs)
    #[arg(value_name = "SNAPSHOT")]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct FigureArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Curated dataset id (2-13)
    #[arg(long, value_name = "ID")]
    figure: u32,
    /// Verify the emitted values against their regression bands; exit 4 on failure
    #[arg(long)]
    self_check: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Homogeneous steady-state branches at the configured pump
    Steady(CommonArgs),
    /// Instability thresholds scanned over the second-harmonic detuning
    Bifurcation(CommonArgs),
    /// Analytic correlation spectra of the linearized fluctuations
    LinearCorr(CommonArgs),
    /// Stochastic field simulation with online correlation estimation
    Simulate(CommonArgs),
    /// Correlation estimation from recorded snapshot files
    Analyze(AnalyzeArgs),
    /// Regenerate one of the curated reference datasets (ids 2-13)
    ReproduceFigure(FigureArgs),
}

fn init_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Steady(common) => {
            init_threads(common.threads)?;
            commands::steady::run(&common)
        }
        Command::Bifurcation(common) => {
            init_threads(common.threads)?;
            commands::bifurcation::run(&common)
        }
        Command::LinearCorr(common) => {
            init_threads(common.threads)?;
            commands::linear_corr::run(&common)
        }
        Command::Simulate(common) => {
            init_threads(common.threads)?;
            commands::simulate::run(&common)
        }
        Command::Analyze(args) => {
            init_threads(args.common.threads)?;
            commands::analyze::run(&args.common, &args.inputs)
        }
        Command::ReproduceFigure(args) => {
            init_threads(args.common.threads)?;
            commands::figures::run(&args.common, args.figure, args.self_check)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shg: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Run(_) => ExitCode::from(3),
                CliError::SelfCheck(_) => ExitCode::from(4),
            }
        }
    }
}
