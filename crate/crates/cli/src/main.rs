use std::path::PathBuf;
use std::process::ExitCode;

use apcl_cli::{execute, Command, ExperimentConfig};
use clap::Parser;

/// Experiments for stochastic conservation laws with almost-periodic data.
#[derive(Debug, Parser)]
#[command(version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory; falls back to $OUTPUT_DIR, then `out`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli
        .out
        .or_else(|| std::env::var_os("OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let result = ExperimentConfig::load(&cli.config)
        .map_err(anyhow::Error::from)
        .and_then(|cfg| execute(cli.command, &cfg, cli.seed, &out, cli.jobs));
    match result {
        Ok(o) => {
            println!("{}", o.summary);
            if o.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
