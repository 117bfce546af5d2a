use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hyperwalk_cli::validate::Fault;
use hyperwalk_cli::{execute, Command, Invocation, EXIT_ERROR};

/// Geodesic random walks on hyperbolic and flat space, and their
/// recurrence/transience classification.
///
/// Exit codes: 0 recurrent (or success), 1 transient (or a failed validation
/// suite), 2 inconclusive, 3 error.
#[derive(Parser)]
#[command(name = "hyperwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an ensemble of walks; write trajectory and summary CSVs.
    Simulate(Args),
    /// Classify the chain as recurrent or transient; write the margins CSV.
    Classify(Args),
    /// Run the numerical oracle suites.
    Validate(Args),
    /// Tabulate closed-form against sampled increment moments.
    Moments(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Config file, or an output file whose header records a config.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, env = "HYPERWALK_SEED")]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let (command, args) = match cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Classify(a) => (Command::Classify, a),
        Cmd::Validate(a) => (Command::Validate, a),
        Cmd::Moments(a) => (Command::Moments, a),
    };
    let inv = Invocation {
        command,
        config: args.config,
        seed: args.seed,
        out: args.out,
        workers: args.workers,
        fault: Fault::None,
    };
    match execute(&inv) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
