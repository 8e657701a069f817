//! `solve`: run one solver on one instance and print the allocation.

use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use serde::Serialize;
use serde_json::json;
use wdp_triage::{brute_force, exact, greedy, WdpInstance};

use crate::dataio::{read_to_string, write_file};
use crate::error::{CliError, CliResult, Code};
use crate::manifest::{write_manifest, RunManifest};

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub instance: PathBuf,
    /// Solver: greedy, exact, or brute.
    #[arg(long)]
    pub solver: String,
    /// Budget for the exact solver, in milliseconds.
    #[arg(long, default_value_t = 10_000)]
    pub time_limit_ms: u64,
    /// Optional output directory; the solution always goes to stdout too.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolutionJson {
    solver: String,
    welfare: f64,
    accepted: Vec<u64>,
    time_ms: u64,
    optimal: bool,
}

pub fn run(args: &SolveArgs) -> CliResult<()> {
    let started = Instant::now();
    let instance = WdpInstance::from_json(&read_to_string(&args.instance)?)?;
    let result = match args.solver.as_str() {
        "greedy" => greedy(&instance)?,
        "exact" => exact(&instance, Duration::from_millis(args.time_limit_ms))?,
        "brute" => brute_force(&instance)?,
        other => {
            return Err(CliError::new(
                Code::Config,
                format!("unknown solver '{other}' (expected greedy, exact, or brute)"),
            ))
        }
    };
    let solution = SolutionJson {
        solver: result.solver_name.to_string(),
        welfare: result.allocation.welfare,
        accepted: result.allocation.accepted_ids(&instance),
        time_ms: (result.wall_time * 1000.0) as u64,
        optimal: result.proven_optimal,
    };
    let text = serde_json::to_string_pretty(&solution)
        .map_err(|e| CliError::new(Code::Json, format!("solution: {e}")))?;
    // A consumer closing stdout early (solve ... | head) is not an error.
    use std::io::Write;
    let _ = writeln!(std::io::stdout(), "{text}");

    if let Some(out) = &args.out {
        fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        write_file(&out.join("solution.json"), &(text + "\n"))?;
        let mut manifest = RunManifest::new(
            "solve",
            json!({
                "solver": args.solver,
                "time_limit_ms": args.time_limit_ms,
            }),
        );
        manifest.inputs = vec![args.instance.display().to_string()];
        manifest.outputs = vec!["solution.json".to_string()];
        manifest.wall_time_ms = started.elapsed().as_millis() as u64;
        write_manifest(out, &manifest)?;
    }
    Ok(())
}
