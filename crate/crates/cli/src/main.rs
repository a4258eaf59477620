//! `boltzevo`: instance generation, experiment runs and manifest checks.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::RunOverrides;
use crate::error::CliError;
use crate::manifest::Manifest;

#[derive(Parser)]
#[command(name = "boltzevo", version, about = "RBM and random-mutation evolution on SAT landscapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a uniform random k-SAT instance in DIMACS format.
    GenInstance {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 4.267)]
        ratio: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the experiment described by a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a manifest and list excluded combinations without running.
    Validate {
        #[arg(long)]
        manifest: PathBuf,
    },
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::GenInstance { n, k, ratio, seed, out } => commands::gen_instance(n, k, ratio, seed, &out),
        Command::Run { manifest, seed, out, jobs } => {
            if jobs == Some(0) {
                return Err(CliError::Usage("--jobs must be positive".into()));
            }
            let manifest = Manifest::load(&manifest)?;
            let summary = commands::run(&manifest, &RunOverrides { seed, out, jobs })?;
            println!("{summary}");
            Ok(())
        }
        Command::Validate { manifest } => {
            let manifest = Manifest::load(&manifest)?;
            for line in commands::validate(&manifest)? {
                println!("{line}");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
