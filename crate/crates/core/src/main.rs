use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use extremal_arrays::harness::cli::{describe, run, RunOptions, Subcommand};

#[derive(Clone, Copy, ValueEnum)]
enum Command {
    Norming,
    SimulateArray,
    EvalLimit,
    SimulateBr,
    SimulatePk,
    Convergence,
}

/// Simulate extremes of elliptical arrays and spherical processes and
/// compare them with their limit laws.
#[derive(Parser)]
#[command(name = "extremal-arrays", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let cmd = match cli.command {
        Command::Norming => Subcommand::Norming,
        Command::SimulateArray => Subcommand::SimulateArray,
        Command::EvalLimit => Subcommand::EvalLimit,
        Command::SimulateBr => Subcommand::SimulateBr,
        Command::SimulatePk => Subcommand::SimulatePk,
        Command::Convergence => Subcommand::Convergence,
    };
    let text = match std::fs::read_to_string(&cli.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", cli.config.display());
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        seed: cli.seed,
        out: cli.out,
    };
    match run(cmd, &text, &opts) {
        Ok(out) => {
            eprintln!("wrote {} and {}", out.csv.display(), out.meta.display());
            if out.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("verdict: fail");
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(2)
        }
    }
}
