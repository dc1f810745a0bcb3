//! `cvdistill`: Gaussifier convergence reports, repeater scans and the
//! invariant suite.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod gaussify;
mod output;
mod scan;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, ConfigError};

#[derive(Parser, Debug)]
#[command(name = "cvdistill", version, about = "Continuous-variable entanglement distillation simulator")]
struct Cli {
    /// Flat key=value scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for report files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Per-mode Fock cutoff.
    #[arg(long, global = true)]
    cutoff: Option<usize>,
    /// Repeater noise model.
    #[arg(long, global = true, value_parser = ["i", "ii", "both"])]
    variant: Option<String>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Extra key=value overrides applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convergence report for a Gaussifier run on a non-Gaussian input.
    Gaussify,
    /// Maximum-distance table over squeezing and repeater depth.
    RepeaterScan,
    /// Run the invariant suite; exit 1 if any check fails.
    Verify,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Domain(cvdistill::Error),
    Io(std::io::Error),
    ChecksFailed(Vec<String>),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Domain(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::ChecksFailed(names) => write!(f, "failed checks: {}", names.join(", ")),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<cvdistill::Error> for CliError {
    fn from(e: cvdistill::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn build_config(cli: &Cli) -> Result<Config, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(c) = cli.cutoff {
        cfg.set("cutoff", c.to_string());
    }
    if let Some(v) = &cli.variant {
        cfg.set("variant", v.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = build_config(cli)?;
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(config::invalid("threads", 0, "need at least one thread").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    match cli.command {
        Command::Gaussify => gaussify::run(cfg, &cli.out),
        Command::RepeaterScan => scan::run(cfg, &cli.out),
        Command::Verify => verify::run(cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::ChecksFailed(names)) => {
            eprintln!("cvdistill: failed checks: {}", names.join(", "));
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("cvdistill: {e}");
            ExitCode::from(2)
        }
    }
}
