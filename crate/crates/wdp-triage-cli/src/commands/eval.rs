//! `eval`: score a trained model on a labeled feature CSV, with a threshold
//! sweep over the configured grid.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde_json::json;
use wdp_triage::{evaluate, threshold_sweep, HardnessModel};

use crate::config::ToolConfig;
use crate::dataio::{read_features_csv, read_to_string, write_file};
use crate::error::{CliError, CliResult, Code};
use crate::manifest::{write_manifest, RunManifest};

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Trained model JSON, from `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Feature CSV with a greedy_gap column.
    #[arg(long)]
    pub features: PathBuf,
    /// Output directory; receives eval.json, sweep.csv, manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Hard/easy gap threshold; defaults to the [eval] section value.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Optional TOML config supplying defaults for the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn sweep_csv_text(sweep: &[(f64, f64)]) -> String {
    let mut text = String::from("threshold,accuracy\n");
    for (theta, accuracy) in sweep {
        text.push_str(&format!("{theta},{accuracy}\n"));
    }
    text
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = ToolConfig::load(args.config.as_deref())?;
    let threshold = args.threshold.unwrap_or(cfg.eval.threshold);

    let model = HardnessModel::from_json(&read_to_string(&args.model)?)?;
    let table = read_features_csv(&args.features)?;
    let gaps = table.gaps.ok_or_else(|| {
        CliError::new(Code::Instance, "features file has no greedy_gap column; eval needs labels")
    })?;

    let report = evaluate(&model, &table.rows, &gaps, threshold)?;
    let sweep = threshold_sweep(&model, &table.rows, &gaps, &cfg.eval.sweep_grid())?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let report_text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::new(Code::Json, format!("eval report: {e}")))?;
    write_file(&args.out.join("eval.json"), &(report_text + "\n"))?;
    write_file(&args.out.join("sweep.csv"), &sweep_csv_text(&sweep))?;

    let mut manifest = RunManifest::new("eval", json!({ "threshold": threshold, "eval": cfg.eval }));
    manifest.inputs = vec![args.model.display().to_string(), args.features.display().to_string()];
    manifest.outputs = vec!["eval.json".to_string(), "sweep.csv".to_string()];
    manifest.wall_time_ms = started.elapsed().as_millis() as u64;
    write_manifest(&args.out, &manifest)
}
