use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dnull_cli::{execute, Command, Invocation, OUT_DIR_ENV};

/// Verify double-null identities, run spherical flows and solve the a=0
/// system from a JSON config.
#[derive(Parser, Debug)]
#[command(name = "dnull", version)]
struct Args {
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for summary.json and the CSV tables.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lattice size, or radial node count for flow-spherical and solve-a0.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(dnull_cli::EXIT_CONFIG as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let inv = Invocation {
        command: args.command,
        config: args.config,
        out: args.out,
        grid: args.grid,
        seed: args.seed,
        env_out: std::env::var_os(OUT_DIR_ENV).map(PathBuf::from),
    };
    ExitCode::from(execute(&inv) as u8)
}
