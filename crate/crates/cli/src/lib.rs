//! Front end for `itep-core`: JSON configuration in, CSV tables and a JSON
//! summary out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

pub use commands::{cmd_density, cmd_eig, cmd_field, cmd_fit, cmd_tunnel};
pub use config::RunConfig;
pub use report::{Report, Status, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numeric(#[from] itep_core::Error),
    #[error("output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Eigenvalue tables per direction and order.
    Eig,
    /// Zero counts in a sector against the density law.
    Density,
    /// Interface residual matrix of the tunneling chain.
    Tunnel,
    /// Recover profile parameters from a spectrum.
    Fit,
    /// Radial parts of (v, w) along one ray.
    Field,
}

#[derive(Debug, Parser)]
#[command(name = "itep", version, about = "Interior transmission eigenvalues by ray-wise radial reduction")]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `output.dir`.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for the root finder's split perturbations.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match command {
        Command::Eig => cmd_eig(cfg),
        Command::Density => cmd_density(cfg),
        Command::Tunnel => cmd_tunnel(cfg),
        Command::Fit => cmd_fit(cfg),
        Command::Field => cmd_field(cfg),
    }
}

/// Loads the config, applies the overrides, runs and writes the report.
pub fn run_with(
    command: Command,
    config: &Path,
    out_dir: Option<&Path>,
    seed: Option<u64>,
) -> Result<Status, CliError> {
    let mut cfg = RunConfig::from_path(config)?;
    if let Some(s) = seed {
        cfg.tolerances.roots.seed = s;
    }
    if let Some(d) = out_dir {
        cfg.output.dir = d.to_path_buf();
    }
    log::info!("{command:?}: config {} (hash {})", config.display(), &cfg.hash()[..12]);
    let report = execute(command, &cfg)?;
    let files = report.write(&cfg, &cfg.output.dir)?;
    log::info!("{command:?}: wrote {} files to {}", files.len(), cfg.output.dir.display());
    Ok(report.status)
}

pub fn main_with(args: Args) -> ExitCode {
    let Some(config) = args.config.as_deref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(2);
    };
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run_with(args.command, config, args.out_dir.as_deref(), args.seed) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
