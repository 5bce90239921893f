use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jps_cli::{run, Command};

/// Joint propensity score dose-response estimation under network interference.
#[derive(Parser)]
#[command(name = "jps", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute network exposures (and neighborhood covariates).
    Exposure(Args),
    /// Fit treatment and outcome models; write coefficient tables.
    Fit(Args),
    /// Estimate the dose-response surface, marginals and effects.
    Drf(Args),
    /// Likelihood-ratio balance diagnostics.
    Balance(Args),
    /// Generate a synthetic panel and compare estimators with the oracle.
    Simulate(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for bootstrap and simulation (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("JPS_LOG", "warn")).init();
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Cmd::Exposure(a) => (Command::Exposure, a),
        Cmd::Fit(a) => (Command::Fit, a),
        Cmd::Drf(a) => (Command::Drf, a),
        Cmd::Balance(a) => (Command::Balance, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
    };
    match run(command, &args.config, args.out, args.seed) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
