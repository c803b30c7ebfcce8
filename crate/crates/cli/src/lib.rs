//! `hmfdamp` command-line driver.
//!
//! Exit status: 0 on success, 1 on validation errors, 2 on numerical
//! failures (blow-up, non-convergence, Penrose violations in the solvers).

pub mod commands;
pub mod config;
pub mod output;

#[cfg(test)]
mod tests;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::{Config, ConfigError};
use output::Output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] hmfdamp::Error),
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}")]
    Input(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hmfdamp", version, about = "Vlasov-HMF splitting and Landau damping toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// `key=value` override; repeatable, applied after the file.
    #[arg(short = 's', long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate and write series.csv and snapshots.
    Run(Common),
    /// Penrose check and Landau root of the configured state.
    Penrose(Common),
    /// Order, limit-state and growth ladders.
    Converge(Common),
    /// Time- and Fourier-domain Volterra solves and the linear prediction.
    Volterra(Common),
    /// Damping fit on an existing series.csv.
    Dampfit(Common),
    /// Scattering limit, weak limit and weighted norms.
    Scatter(Common),
    /// Print the canonical form of the configuration.
    Config(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::Run(c) => ("run", c),
            Command::Penrose(c) => ("penrose", c),
            Command::Converge(c) => ("converge", c),
            Command::Volterra(c) => ("volterra", c),
            Command::Dampfit(c) => ("dampfit", c),
            Command::Scatter(c) => ("scatter", c),
            Command::Config(c) => ("config", c),
        }
    }
}

fn load(common: &Common) -> Result<Config, CliError> {
    match &common.config {
        Some(p) => Config::load(p, &common.overrides),
        None => Ok(Config::parse("", &common.overrides)?),
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let (name, common) = cli.command.parts();
    let cfg = load(common)?;
    if name == "config" {
        print!("{}", cfg.canonical());
        return Ok(());
    }
    let mut out = Output::create(&cfg, name)?;
    match name {
        "run" => commands::cmd_run(&cfg, &mut out)?,
        "penrose" => commands::cmd_penrose(&cfg, &mut out)?,
        "converge" => commands::cmd_converge(&cfg, &mut out)?,
        "volterra" => commands::cmd_volterra(&cfg, &mut out)?,
        "dampfit" => commands::cmd_dampfit(&cfg, &mut out)?,
        "scatter" => commands::cmd_scatter(&cfg, &mut out)?,
        _ => unreachable!("subcommand list is closed"),
    }
    out.finish()
}

/// Caps the global thread pool from `HMFDAMP_THREADS` if set.
pub fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("HMFDAMP_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Input(format!("HMFDAMP_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match init_threads().and_then(|_| execute(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
