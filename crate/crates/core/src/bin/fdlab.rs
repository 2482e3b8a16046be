use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fdlab::harness;

#[derive(Parser)]
#[command(name = "fdlab", version, about = "Singular fast diffusion and Yamabe-flow end geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write trajectory.csv
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the solution properties and the comparison functions
    Verify {
        #[arg(long)]
        traj: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Conformal geometry; without --traj only the initial metric is analysed
    Geometry {
        #[arg(long)]
        traj: Option<PathBuf>,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every *.conf in a directory
    Sweep {
        #[arg(long)]
        configs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve { config, out } => harness::cmd_solve(config, out),
        Command::Verify { traj, config, out } => harness::cmd_verify(traj, config, out),
        Command::Geometry { traj, config, out } => harness::cmd_geometry(traj.as_deref(), config, out),
        Command::Sweep { configs, out, jobs } => harness::cmd_sweep(configs, out, *jobs),
    };
    if outcome.code == 0 {
        println!("{}", outcome.message);
    } else {
        eprintln!("{}", outcome.message);
    }
    ExitCode::from(outcome.code as u8)
}
