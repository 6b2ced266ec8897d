use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use exgal_cli::{cmd_certify, cmd_solve, cmd_study, Invocation};

/// Exhaustion-Galerkin solver for singular 1D variational problems.
#[derive(Debug, Parser)]
#[command(name = "exgal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for report files (overrides `output.dir` in the config).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the level schedule; writes report.json, levels.csv, solution.csv.
    Solve { config: PathBuf },
    /// Certify the first scheduled level; writes certificate.json.
    Certify { config: PathBuf },
    /// Mesh convergence sweep on the first subdomain; writes study.csv.
    Study { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, run): (PathBuf, fn(&Invocation) -> i32) = match cli.command {
        Command::Solve { config } => (config, cmd_solve),
        Command::Certify { config } => (config, cmd_certify),
        Command::Study { config } => (config, cmd_study),
    };
    let inv = Invocation {
        config,
        output_dir: cli.output_dir,
        quiet: cli.quiet,
    };
    ExitCode::from(run(&inv) as u8)
}
