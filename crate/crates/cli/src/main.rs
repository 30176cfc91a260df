//! `ifm-lab`: runs the interaction-free measurement experiments and writes
//! CSV tables, SVG figures and a replayable JSON manifest per run.

mod commands;
mod output;
mod plot;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{
    execute, replay, BaselineArgs, ConfigError, EvSweepArgs, MultiObjectArgs, NoiseRobustnessArgs, NumericalFailure,
    OptimalRArgs, ReplayArgs, TreeArgs, ZenoArgs,
};

#[derive(Parser)]
#[command(name = "ifm-lab", version, about = "Interaction-free measurement experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-object efficiency against reflectivity.
    EvSweep(EvSweepArgs),
    /// Cascade efficiency for n = 1..n_max objects.
    MultiObject(MultiObjectArgs),
    /// Reflectivity-noise histograms and spreads for multimode chains.
    NoiseRobustness(NoiseRobustnessArgs),
    /// Optimal cascade reflectivities.
    OptimalR(OptimalRArgs),
    /// Object-present against object-removed probabilities.
    Baseline(BaselineArgs),
    /// Binary-tree layout and chain listing.
    Tree(TreeArgs),
    /// Closed-form multi-pass efficiency.
    Zeno(ZenoArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<NumericalFailure>().is_some() {
        return 3;
    }
    if e.downcast_ref::<ConfigError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<ifm_core::Error>() {
        Some(ifm_core::Error::NotUnitary { .. } | ifm_core::Error::NonFinite(_) | ifm_core::Error::ZeroProbability) => 3,
        Some(_) => 2,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::EvSweep(a) => execute(a),
        Command::MultiObject(a) => execute(a),
        Command::NoiseRobustness(a) => execute(a),
        Command::OptimalR(a) => execute(a),
        Command::Baseline(a) => execute(a),
        Command::Tree(a) => execute(a),
        Command::Zeno(a) => execute(a),
        Command::Replay(a) => replay(&a),
    };
    match result {
        Ok(manifest) => {
            eprintln!("manifest: {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
