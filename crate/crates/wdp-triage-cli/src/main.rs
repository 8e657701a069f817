//! Command-line front end for the winner-determination triage toolkit:
//! adversarial instance generators, greedy and exact solvers, structural
//! feature extraction, the learned hardness regressor, and the hybrid
//! router, wired into reproducible file-based runs.

mod commands;
mod config;
mod dataio;
mod error;
mod manifest;

use clap::{Parser, Subcommand};

use crate::error::{CliError, CliResult, Code};

#[derive(Parser)]
#[command(name = "wdp-triage", version, about = "Winner-determination triage toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write benchmark instances with label sidecars and a manifest.
    Generate(commands::generate::GenerateArgs),
    /// Solve one instance with one solver and print the allocation.
    Solve(commands::solve::SolveArgs),
    /// Extract structural features from a generated directory into a CSV.
    Features(commands::features::FeaturesArgs),
    /// Train the hardness regressor on a labeled feature CSV.
    Train(commands::train::TrainArgs),
    /// Score a trained model: regression metrics plus a threshold sweep.
    Eval(commands::eval::EvalArgs),
    /// Route labeled instances through one selector arm and score it.
    Route(commands::route::RouteArgs),
    /// Compare routing policies end to end on one labeled directory.
    Bench(commands::bench::BenchArgs),
    /// Run the whole study: generate, label, train, evaluate, ablate, bench.
    Pipeline(commands::pipeline::PipelineArgs),
}

/// WDP_TRIAGE_THREADS caps the rayon worker count. Worker count affects
/// wall time only; every output byte is identical at any setting.
fn init_threads() -> CliResult<()> {
    let raw = match std::env::var("WDP_TRIAGE_THREADS") {
        Ok(raw) => raw,
        Err(_) => return Ok(()),
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::new(
                Code::Config,
                format!("WDP_TRIAGE_THREADS must be a positive integer, got '{raw}'"),
            )
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::new(Code::Config, format!("thread pool: {e}")))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Generate(args) => commands::generate::run(args),
        Command::Solve(args) => commands::solve::run(args),
        Command::Features(args) => commands::features::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Route(args) => commands::route::run(args),
        Command::Bench(args) => commands::bench::run(args),
        Command::Pipeline(args) => commands::pipeline::run(args),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = init_threads().and_then(|()| dispatch(&cli)) {
        eprintln!("{err}");
        std::process::exit(1);
    }
}
