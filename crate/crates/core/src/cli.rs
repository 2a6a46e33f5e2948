//! Argument parsing, thread setup and exit codes for the `homdip` binary.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands;
use crate::error::{Error, Result};
use crate::scenario::{Command, Scenario};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;
pub const THREADS_ENV: &str = "HOMDIP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "homdip", version, about = "HOM coincidence-dip simulation and dephasing-time fits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Clone, clap::Args)]
pub struct RunArgs {
    /// Scenario TOML file (a run manifest also works).
    #[arg(long)]
    pub config: PathBuf,
    /// Override a scalar: `table.key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Delay scans, one CSV per angle.
    Dip(RunArgs),
    /// Visibility, dip shift and mean rate against loss.
    Sweep(RunArgs),
    /// Lorentz fits of the system spectrum; T2 against loss.
    FitT2(RunArgs),
}

/// Config problems exit with 2, numerical failures with 3.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numeric() {
        EXIT_NUMERIC
    } else {
        EXIT_CONFIG
    }
}

/// Parses `HOMDIP_THREADS`; `None` means rayon's default.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

pub fn execute(cli: &Cli) -> Result<Vec<PathBuf>> {
    let (command, args) = match &cli.command {
        Sub::Dip(a) => (Command::Dip, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::FitT2(a) => (Command::FitT2, a),
    };
    let scenario = Scenario::load(&args.config, &args.overrides)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads_from_env()? {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| commands::run(command, &scenario, &args.out_dir))
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("homdip: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
