//! Command-line driver for the optdesign library.

use clap::{Parser, Subcommand};
use optdesign::cli;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "optdesign", version, about = "Locally optimal experimental design for nonlinear prediction models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured design algorithm and write design/trace outputs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's output block).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override for seeded scan orders and sampling.
        #[arg(long)]
        seed: Option<u64>,
        /// Accepted for interface compatibility; computations are
        /// single-threaded per invocation.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Evaluate a design's criterion value and optimality certificate.
    Certify {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        config: PathBuf,
    },
    /// Check convergence-rate bounds against a run trace.
    Rates {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a design's support via Carathéodory's lemma.
    Reduce {
        #[arg(long)]
        design: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let result = match &args.command {
        Command::Run { config, out, seed, threads: _ } => {
            cli::cmd_run_seeded(config, out.as_deref(), *seed)
        }
        Command::Certify { design, config } => cli::cmd_certify(design, config),
        Command::Rates { trace, config, out } => cli::cmd_rates(trace, config, out.as_deref()),
        Command::Reduce { design, config, out } => cli::cmd_reduce(design, config, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::EXIT_ERROR as u8)
        }
    }
}
