use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use dkg_cli::{execute, RunOptions};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    Simulate,
    Ledger,
    Probe,
    Region,
    Schedule,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Ledger => "ledger",
            Command::Probe => "probe",
            Command::Region => "region",
            Command::Schedule => "schedule",
        }
    }
}

/// Dirac-Klein-Gordon experiments.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    command: Command,
    /// JSON configuration with one top-level key matching the subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSVs and the manifest.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides every seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for parameter sweeps.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = RunOptions {
        out: args.out,
        seed: args.seed,
        threads: args.threads,
    };
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    ExitCode::from(execute(args.command.name(), &text, &opts) as u8)
}
