use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vlasov::bench::alloc::TrackingAllocator;
use vlasov::cli::{execute, Command};

#[global_allocator]
static ALLOC: TrackingAllocator = TrackingAllocator;

/// Semi-Lagrangian Vlasov-Poisson solver.
#[derive(Parser)]
#[command(version)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Time-step a problem and write its diagnostics CSV.
    Run { config: PathBuf },
    /// Time Strang steps and record allocation peaks.
    Bench { config: PathBuf },
    /// Compare methods against a fine spline reference.
    Convergence { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let (command, config) = match args.command {
        Cmd::Run { config } => (Command::Run, config),
        Cmd::Bench { config } => (Command::Bench, config),
        Cmd::Convergence { config } => (Command::Convergence, config),
    };
    ExitCode::from(execute(command, &config) as u8)
}
