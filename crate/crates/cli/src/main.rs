use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use gibbs_cli::{run_file, RunOptions};

/// Simulate and verify finite Gibbs point processes.
#[derive(Debug, Parser)]
#[command(name = "gibbs", version)]
struct Args {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(long, default_value = "out")]
    output: PathBuf,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let opts = RunOptions {
        threads: args.threads,
        seed: args.seed,
    };
    match run_file(&args.config, &args.output, &opts) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
