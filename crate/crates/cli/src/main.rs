//! `trilattice` command-line front end. Every command writes its outputs and
//! a `<command>_manifest.json` into `--out`.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "trilattice", version, about = "Forced waves in the triangular mass-spring lattice")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Accepted for interface compatibility; every command is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one dispersion surface on the periodicity rectangle.
    Dispersion(commands::DispersionArgs),
    /// Isofrequency contours of one branch.
    Contours(commands::ContoursArgs),
    /// Stationary points of both branches with their quadratic coefficients and ray fans.
    Critical,
    /// Asymptotic resonant field on a block of nodes.
    Field(commands::FieldArgs),
    /// Transient simulation from a JSON configuration.
    Simulate(commands::SimulateArgs),
    /// Score a simulated snapshot against an asymptotic field.
    Compare(commands::CompareArgs),
}

fn run(cli: Cli) -> error::Result<()> {
    if cli.common.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.common.threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {} threads: {e}", cli.common.threads)))?;
    }
    let out = &cli.common.out;
    let manifest = match &cli.command {
        Command::Dispersion(a) => commands::dispersion(out, a),
        Command::Contours(a) => commands::contours(out, a),
        Command::Critical => commands::critical(out),
        Command::Field(a) => commands::field(out, a),
        Command::Simulate(a) => commands::simulate(out, a),
        Command::Compare(a) => commands::compare(out, a),
    }?;
    for f in &manifest.outputs {
        log::info!("wrote {}", out.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
