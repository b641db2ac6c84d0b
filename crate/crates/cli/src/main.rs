use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use poro_cli::{cmd_compare, cmd_convergence, cmd_run, cmd_sweep_alpha, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "poro", version, about = "Biot poroelasticity experiments: semi-explicit vs implicit time stepping")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// One scheme on one mesh with one step size.
    Run(Args),
    /// Error and order tables over tau levels (or tau = h levels).
    Convergence(Args),
    /// Semi-explicit deviation from the implicit scheme over coupling strengths.
    SweepAlpha(Args),
    /// Wall-time comparison of (scheme, tau) pairs.
    Compare(Args),
}

#[derive(clap::Args)]
struct Args {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel workers for independent runs (overrides `workers`).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Run(a) => (Command::Run, a),
        Sub::Convergence(a) => (Command::Convergence, a),
        Sub::SweepAlpha(a) => (Command::SweepAlpha, a),
        Sub::Compare(a) => (Command::Compare, a),
    };
    let mut config = match ExperimentConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    if args.workers.is_some() {
        config.workers = args.workers;
    }
    let result = match command {
        Command::Run => cmd_run(&config),
        Command::Convergence => cmd_convergence(&config),
        Command::SweepAlpha => cmd_sweep_alpha(&config),
        Command::Compare => cmd_compare(&config),
    };
    let table = match result {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match poro_cli::output::write_all(&table, &config.output_dir) {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Err(e) => {
            eprintln!("cannot write results to {}: {e}", config.output_dir.display());
            return ExitCode::FAILURE;
        }
    }
    for line in &table.summary {
        println!("{line}");
    }
    for failure in &table.failures {
        eprintln!("run failed: {failure}");
    }
    if !table.failures.is_empty() && command != Command::SweepAlpha {
        return ExitCode::from(3);
    }
    ExitCode::SUCCESS
}
