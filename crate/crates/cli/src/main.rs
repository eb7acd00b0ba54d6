//! Batch CLI: library baking, MEP solving, dynamics runs, band relaxation.
//!
//! Exit codes: 0 converged/completed, 2 non-convergence or aborted
//! integration (partial outputs retained), 3 input error.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{band_relax, dynamics_run, library_build, mep_run};

#[derive(Parser)]
#[command(
    name = "chainpath",
    about = "Periodic energy landscapes, minimum-energy paths, and constrained chain dynamics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bake a propensity library from dihedral sample CSVs.
    LibraryBuild(library_build::Args),
    /// Relax a path between two conformations on a chain landscape.
    MepRun(mep_run::Args),
    /// Integrate a multibody system and record its trajectory.
    DynamicsRun(dynamics_run::Args),
    /// Relax a replica band of a coarse-grained chain.
    BandRelax(band_relax::Args),
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::LibraryBuild(args) => library_build::run(&args),
        Command::MepRun(args) => mep_run::run(&args),
        Command::DynamicsRun(args) => dynamics_run::run(&args),
        Command::BandRelax(args) => band_relax::run(&args),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code_for(&err));
        }
    }
}

fn exit_code_for(err: &chainpath::Error) -> i32 {
    use chainpath::Error::*;
    match err {
        NoConvergence { .. } | IntegrationAborted { .. } | NonFiniteValue { .. } => 2,
        InvalidArgument(_) | Config(_) | MissingView(_) | NonpositiveProbability { .. }
        | DegeneratePath(_) | DegenerateGeometry(_) | CsvRow { .. } | Format(_) | Io(_) => 3,
        RankDeficient(_) | SingularSystem(_) => 3,
    }
}
