use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use skwave_cli::{list_experiments, rerun_manifest, run_file, Outcome, SCHEMA, SEED_ENV};

#[derive(Parser)]
#[command(name = "skwave", version, about = "Stochastic wave equation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file
    Run { config: PathBuf },
    /// Rerun a recorded manifest and check the results reproduce
    Rerun {
        manifest: PathBuf,
        /// Output directory (default: `rerun/` next to the manifest)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the worker count
        #[arg(long)]
        workers: Option<usize>,
    },
    /// List the available experiments
    ListExperiments,
    /// Print the annotated configuration schema
    PrintSchema,
}

fn report(outcome: Outcome) -> ExitCode {
    for m in &outcome.messages {
        println!("{m}");
    }
    if let Some(dir) = &outcome.output_dir {
        println!("outputs written to {}", dir.display());
    }
    for e in &outcome.errors {
        eprintln!("error: {e}");
    }
    ExitCode::from(outcome.status.code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let seed = std::env::var(SEED_ENV).ok();
            report(run_file(&config, seed.as_deref()))
        }
        Command::Rerun {
            manifest,
            out,
            workers,
        } => report(rerun_manifest(&manifest, out.as_deref(), workers)),
        Command::ListExperiments => {
            print!("{}", list_experiments());
            ExitCode::SUCCESS
        }
        Command::PrintSchema => {
            print!("{SCHEMA}");
            ExitCode::SUCCESS
        }
    }
}
