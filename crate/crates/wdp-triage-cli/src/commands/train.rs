//! `train`: fit the hardness regressor on a labeled feature CSV.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;

use crate::config::ToolConfig;
use crate::dataio::{read_features_csv, write_file};
use crate::error::{CliError, CliResult, Code};
use crate::manifest::{write_manifest, RunManifest};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Feature CSV with a greedy_gap column, from `features`.
    #[arg(long)]
    pub features: PathBuf,
    /// Output directory; receives model.json, train_report.json, manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Training seed; fixes initialization, the split, and every shuffle.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Optional TOML config; the [train] section sets the hyperparameters.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = ToolConfig::load(args.config.as_deref())?;
    let table = read_features_csv(&args.features)?;
    let gaps = table.gaps.ok_or_else(|| {
        CliError::new(Code::Train, "features file has no greedy_gap column; training needs labels")
    })?;

    let train_config = cfg.train.train_config(args.seed);
    let (model, report) = wdp_triage::train(&table.rows, &gaps, &train_config)?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    write_file(&args.out.join("model.json"), &(model.to_json() + "\n"))?;
    let report_text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::new(Code::Json, format!("train report: {e}")))?;
    write_file(&args.out.join("train_report.json"), &(report_text + "\n"))?;

    let mut manifest = RunManifest::new("train", cfg.echo());
    manifest.seeds = vec![args.seed];
    manifest.inputs = vec![args.features.display().to_string()];
    manifest.outputs = vec!["model.json".to_string(), "train_report.json".to_string()];
    manifest.wall_time_ms = started.elapsed().as_millis() as u64;
    write_manifest(&args.out, &manifest)
}
