//! `levelchain` command-line front end.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid problem: {0}")]
    Problem(String),
    #[error("{0}")]
    Runtime(String),
    /// The comparison ran but did not pass its threshold.
    #[error("comparison failed: max |z| = {max_abs_z} exceeds {threshold}")]
    Statistical { max_abs_z: f64, threshold: f64 },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Problem(_) => 2,
            CliError::Runtime(_) | CliError::Statistical { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "levelchain", version, about = "Convergence trajectories of (1+1) elitist EAs")]
struct Cli {
    /// Print a configuration file with every default and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form trajectory CSV (t,F,E,R) and coefficient report.
    Analyze(Common),
    /// Monte-Carlo trajectory CSV (t,mean_F,stderr,E_emp,R_emp).
    Simulate(Common),
    /// Per-generation z-scores of simulation against the closed form.
    Compare(Common),
    /// The matrix power R^t from its power factors.
    Power(PowerArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// CSV destination; overrides the config file. Standard output otherwise.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    runs: Option<u64>,
    #[arg(long, value_name = "T")]
    horizon: Option<u64>,
    /// Simulation worker threads. Output does not depend on this.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Exact rational arithmetic for the closed form.
    #[arg(long)]
    rational: bool,
}

#[derive(Debug, Args)]
struct PowerArgs {
    #[command(flatten)]
    common: Common,
    /// Exponent of the power.
    #[arg(short = 't', long = "exponent", value_name = "T")]
    exponent: u64,
    /// Also multiply the matrix out directly and report the deviation.
    #[arg(long)]
    oracle: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        let overrides = Overrides {
            out: self.out.clone(),
            seed: self.seed,
            runs: self.runs,
            horizon: self.horizon,
            workers: self.workers,
        };
        if overrides.horizon == Some(0) || overrides.runs == Some(0) || overrides.workers == Some(0) {
            return Err(CliError::Config("--horizon, --runs and --workers must be positive".into()));
        }
        cfg.apply(&overrides);
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if cli.print_defaults {
        print!("{}", config::DEFAULTS_TOML);
        return Ok(());
    }
    let Some(command) = cli.command else {
        return Err(CliError::Config(
            "no subcommand given; try `levelchain --help`".into(),
        ));
    };
    match command {
        Command::Analyze(c) => commands::analyze(&c.load()?, c.rational),
        Command::Simulate(c) => commands::simulate(&c.load()?),
        Command::Compare(c) => commands::compare(&c.load()?, c.rational),
        Command::Power(p) => commands::power(&p.common.load()?, p.exponent, p.oracle, p.common.rational),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("levelchain: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
