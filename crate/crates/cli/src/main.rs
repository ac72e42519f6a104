mod commands;
mod error;
mod output;
mod problem;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ChannelArgs, SimulateArgs};
use error::CliError;
use problem::Problem;

/// Rate regions and protocol simulation for distributed quantum
/// measurements with coding for computing.
#[derive(Parser, Debug)]
#[command(name = "dqms", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the independent-set families and the lifted function.
    Graph { problem: PathBuf },
    /// Print the rate bounds as CSV (label,R,RS).
    Rates {
        problem: PathBuf,
        #[command(flatten)]
        channels: ChannelArgs,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the finite-blocklength protocol and report its performance as JSON.
    Simulate {
        problem: PathBuf,
        #[command(flatten)]
        sim: SimulateArgs,
        #[command(flatten)]
        channels: ChannelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep Alice's channel over a grid and emit points and hull corners as CSV.
    Region {
        problem: PathBuf,
        /// Grid resolution per channel row.
        #[arg(long, default_value_t = 50)]
        grid: usize,
        /// Bob's channel for the two-sided bound.
        #[arg(long, value_name = "FILE")]
        channel_b: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("DQMS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Validation(format!(
                "DQMS_THREADS: expected a positive integer, got {value:?}"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Io(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Graph { problem } => {
            let p = Problem::load(&problem)?;
            print!("{}", commands::graph(&p)?);
            Ok(())
        }
        Command::Rates {
            problem,
            channels,
            out,
        } => {
            let p = Problem::load(&problem)?;
            commands::rates(&p, &channels, out.as_deref())
        }
        Command::Simulate {
            problem,
            sim,
            channels,
            out,
        } => {
            let p = Problem::load(&problem)?;
            commands::simulate(&p, &sim, &channels, out.as_deref())
        }
        Command::Region {
            problem,
            grid,
            channel_b,
            out,
        } => {
            let p = Problem::load(&problem)?;
            let ch = ChannelArgs {
                channel_b,
                ..ChannelArgs::default()
            };
            commands::region(&p, grid, &ch, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
