//! `features`: extract the 20 structural features from a generated
//! directory into one CSV, carrying greedy-gap labels through when the
//! directory is fully labeled.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde_json::json;
use wdp_triage::{extract, FeatureVector};

use crate::dataio::{features_csv_text, read_corpus, write_file};
use crate::error::{CliError, CliResult, Code};
use crate::manifest::{write_manifest, RunManifest};

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Directory of instance JSONs written by `generate`.
    #[arg(long)]
    pub dir: PathBuf,
    /// Output directory; receives features.csv and the manifest.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &FeaturesArgs) -> CliResult<()> {
    let started = Instant::now();
    let entries = read_corpus(&args.dir)?;

    // Labels ride along only when the whole directory has them; a partial
    // labeling is treated as a broken dataset rather than silently dropped.
    let labeled = entries.iter().filter(|e| e.label.is_some()).count();
    let gaps: Option<Vec<f64>> = if labeled == entries.len() {
        Some(entries.iter().map(|e| e.label.as_ref().unwrap().greedy_gap).collect())
    } else if labeled == 0 {
        None
    } else {
        return Err(CliError::new(
            Code::Instance,
            format!("{labeled} of {} instances have label sidecars; label all or none", entries.len()),
        ));
    };

    let rows: Vec<FeatureVector> = entries
        .par_iter()
        .map(|e| extract(&e.instance).map_err(CliError::from))
        .collect::<CliResult<_>>()?;
    let stems: Vec<String> = entries.iter().map(|e| e.stem.clone()).collect();

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    write_file(&args.out.join("features.csv"), &features_csv_text(&stems, &rows, gaps.as_deref()))?;

    let mut manifest = RunManifest::new(
        "features",
        json!({ "labeled": gaps.is_some(), "instances": entries.len() }),
    );
    manifest.inputs = vec![args.dir.display().to_string()];
    manifest.outputs = vec!["features.csv".to_string()];
    manifest.wall_time_ms = started.elapsed().as_millis() as u64;
    write_manifest(&args.out, &manifest)
}
