use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hessian_lab_cli::error::EXIT_CHECK;
use hessian_lab_cli::{run, Command, RunOptions};

/// Solver and estimate laboratory for Hessian-type equations on tori.
#[derive(Parser)]
#[command(name = "hessian-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the pair equation at every configured size.
    Solve(Args),
    /// Run the randomized structural-condition suite.
    VerifyConditions(Args),
    /// Run the experiment named in the config's `[experiment]` table.
    Experiment(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for every randomized step (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::VerifyConditions(a) => (Command::VerifyConditions, a),
        Cmd::Experiment(a) => (Command::Experiment, a),
    };
    let opts = RunOptions {
        config: args.config,
        out: args.out,
        seed: args.seed,
        threads: args.threads,
    };
    match run(cmd, &opts) {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            for c in &report.checks {
                println!(
                    "{} {}: {}",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
