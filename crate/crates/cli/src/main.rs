//! `riskbound`: compute, sweep and verify lower bounds on the risk-sensitive
//! estimation cost, writing CSV.

mod bound;
mod config;
mod phase;
mod plot;
mod table;
mod values;
mod verify;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::table::Table;

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_DOMAIN: u8 = 3;
pub const EXIT_VERIFY: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Library(#[from] riskbound::Error),
    #[error("{0}")]
    Verification(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Library(_) => EXIT_DOMAIN,
            CliError::Verification(_) => EXIT_VERIFY,
            CliError::Usage(_) | CliError::Io(_) | CliError::Csv(_) => EXIT_USAGE,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "riskbound",
    version,
    about = "Lower bounds on ln E exp{alpha (estimate - theta)^2}"
)]
#[command(
    after_help = "Numeric options take a value, a comma list, or start:stop:steps; rows are the \
                        cartesian product with the first listed column varying slowest. `inf` marks \
                        +infinity. Exit codes: 0 ok, 2 usage, 3 infeasible parameters, 4 verification failure."
)]
pub struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Worker threads (default: RISKBOUND_THREADS or all cores).
    #[arg(long, global = true, env = "RISKBOUND_THREADS")]
    threads: Option<usize>,
    /// Log-space every start:stop:steps sweep.
    #[arg(long, global = true)]
    log: bool,
    /// Read `key = value` defaults from FILE; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one bound family over a parameter grid.
    Bound {
        #[command(subcommand)]
        kind: bound::BoundKind,
    },
    /// Bernoulli error exponents and the Curie-Weiss phase diagram.
    Phase {
        #[command(subcommand)]
        cmd: phase::PhaseCmd,
    },
    /// Monte Carlo and exact checks of the bounds.
    Verify {
        #[command(subcommand)]
        cmd: verify::VerifyCmd,
    },
    /// Write a gnuplot script for a CSV produced by this tool.
    EmitPlot(plot::PlotArgs),
}

/// What a command produced: a table plus an optional failure to report after
/// the table is written.
pub struct Output {
    pub table: Table,
    pub failure: Option<CliError>,
}

impl From<Table> for Output {
    fn from(table: Table) -> Self {
        Self {
            table,
            failure: None,
        }
    }
}

fn execute(cli: &Cli) -> Result<Option<Output>, CliError> {
    match &cli.command {
        Command::Bound { kind } => bound::run(kind, cli.log).map(|t| Some(t.into())),
        Command::Phase { cmd } => phase::run(cmd, cli.log).map(|t| Some(t.into())),
        Command::Verify { cmd } => verify::run(cmd, cli.log).map(Some),
        Command::EmitPlot(args) => {
            plot::run(args, cli.output.as_deref())?;
            Ok(None)
        }
    }
}

fn write_output(cli: &Cli, out: &Output, echo: Option<&str>) -> Result<(), CliError> {
    match &cli.output {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            out.table.write(&mut w, echo)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            out.table.write(&mut w, echo)?;
        }
    }
    Ok(())
}

fn real_main() -> Result<(), CliError> {
    let args: Vec<String> = std::env::args().collect();
    let merged = config::merge_config(&args)?;
    let echo = merged.as_ref().map(|m| {
        let kv: Vec<String> = m
            .effective
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("config: {}", kv.join(" "))
    });
    let argv = merged.map_or(args, |m| m.args);
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            return Err(CliError::Usage(
                e.to_string().lines().next().unwrap_or("").to_string(),
            ))
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(out) = execute(&cli)? {
        write_output(&cli, &out, echo.as_deref())?;
        if let Some(f) = out.failure {
            return Err(f);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("riskbound: {}", e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code())
        }
    }
}
