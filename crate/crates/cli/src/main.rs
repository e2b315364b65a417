//! `trimer`: integrate, analyze and sweep the escape dynamics of three
//! particles on a line.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::commands::ChartArg;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("tolerance not met: {0}")]
    Tolerance(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] trimer_core::Error),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 1 for I/O.
    pub fn exit_code(&self) -> u8 {
        use trimer_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Tolerance(_) => 3,
            CliError::Io(_) => 1,
            CliError::Core(E::InvalidParams(_) | E::Domain(_)) => 2,
            CliError::Core(E::Analysis(_) | E::Integration(_) | E::Convergence { .. }) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "trimer", version, about = "Escape dynamics of three particles on a line")]
struct Cli {
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Also write an SVG plot.
    #[arg(long, global = true)]
    svg: bool,
    /// Chart to work in; inferred from the energy when absent.
    #[arg(long, global = true, value_enum)]
    chart: Option<ChartArg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one orbit from `simulate.initial`.
    Simulate,
    /// Rest points and their linearizations.
    Equilibria,
    /// Periodic orbit through the symmetric section by shooting.
    PoSearch,
    /// Heteroclinic connection between the triple-escape rest points.
    Hetero,
    /// Escape statistics over random initial conditions.
    Sweep {
        /// Overrides `sweep.seed`.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Orbits on the infinity manifold.
    Infinity,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = config::RunConfig::load(cli.config.as_deref())?;
    if let Command::Sweep { seed: Some(seed) } = cli.command {
        cfg.sweep.seed = seed;
    }
    let mut ctx = commands::Context::new(cfg, &cli.out, cli.svg, cli.chart)?;
    let result = match cli.command {
        Command::Simulate => commands::simulate(&mut ctx),
        Command::Equilibria => commands::equilibria(&mut ctx),
        Command::PoSearch => commands::po_search(&mut ctx),
        Command::Hetero => commands::hetero(&mut ctx),
        Command::Sweep { .. } => commands::sweep(&mut ctx),
        Command::Infinity => commands::infinity(&mut ctx),
    };
    for path in &ctx.out.written {
        println!("wrote {}", path.display());
    }
    result
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
