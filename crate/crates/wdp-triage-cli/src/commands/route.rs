//! `route`: run one selector arm over a labeled directory and score the
//! routing decisions and welfare gaps against the stored labels.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Args;
use serde_json::json;
use wdp_triage::{
    calibrate_cv_threshold, evaluate_hybrid, HardnessModel, HybridReport, SelectorConfig,
    SelectorMode,
};

use crate::commands::{labeled_from_corpus, tagged_from_corpus};
use crate::config::ToolConfig;
use crate::dataio::{read_corpus, read_to_string, write_file};
use crate::error::{CliError, CliResult, Code};
use crate::manifest::{write_manifest, RunManifest};

#[derive(Debug, Args)]
pub struct RouteArgs {
    /// Labeled instance directory, from `generate`.
    #[arg(long)]
    pub dir: PathBuf,
    /// Output directory; receives route_report.json, route_instances.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Selector arm: cv or learned.
    #[arg(long, default_value = "cv")]
    pub selector: String,
    /// Trained model JSON; required by the learned selector.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Threshold for the active selector (CV or predicted gap).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Calibrate the CV threshold from this labeled directory.
    #[arg(long)]
    pub calibrate_dir: Option<PathBuf>,
    /// Exact-solver budget on the expensive arm, in milliseconds.
    #[arg(long)]
    pub time_limit_ms: Option<u64>,
    /// Optional TOML config supplying defaults for the flags above.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Per-instance CSV rows for a routing report, stems supplied by the caller.
pub fn route_rows_csv(report: &HybridReport, stems: &[String]) -> String {
    let mut text = String::from("instance,tag,decision,gap,cv,predicted_gap\n");
    for (row, stem) in report.rows.iter().zip(stems) {
        let tag = match row.tag {
            wdp_triage::Tag::Hard => "hard",
            wdp_triage::Tag::Easy => "easy",
        };
        let decision = if row.routed_expensive { "expensive" } else { "cheap" };
        let predicted = match row.predicted_gap {
            Some(p) => format!("{p}"),
            None => String::new(),
        };
        text.push_str(&format!("{stem},{tag},{decision},{},{},{predicted}\n", row.gap, row.cv));
    }
    text
}

pub fn load_model(path: &Path) -> CliResult<HardnessModel> {
    if !path.exists() {
        return Err(CliError::new(Code::Model, format!("model file not found: {}", path.display())));
    }
    Ok(HardnessModel::from_json(&read_to_string(path)?)?)
}

pub fn run(args: &RouteArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = ToolConfig::load(args.config.as_deref())?;
    let time_limit = Duration::from_millis(args.time_limit_ms.unwrap_or(cfg.route.time_limit_ms));

    let mode = match args.selector.as_str() {
        "cv" => SelectorMode::CvThreshold,
        "learned" => SelectorMode::Learned,
        other => {
            return Err(CliError::new(
                Code::Config,
                format!("unknown selector '{other}' (expected cv or learned)"),
            ))
        }
    };
    let model = match (&mode, &args.model) {
        (SelectorMode::Learned, None) => {
            return Err(CliError::new(Code::Config, "selector 'learned' requires --model"))
        }
        (_, Some(path)) => Some(load_model(path)?),
        (_, None) => None,
    };

    let mut cv_threshold = cfg.route.cv_threshold;
    let mut learned_threshold = cfg.route.learned_threshold;
    match mode {
        SelectorMode::CvThreshold => {
            if let Some(t) = args.threshold {
                cv_threshold = t;
            }
        }
        _ => {
            if let Some(t) = args.threshold {
                learned_threshold = t;
            }
        }
    }
    if let Some(calib_dir) = &args.calibrate_dir {
        if mode != SelectorMode::CvThreshold {
            return Err(CliError::new(Code::Config, "--calibrate-dir only applies to the cv selector"));
        }
        let calib_entries = read_corpus(calib_dir)?;
        cv_threshold = calibrate_cv_threshold(&tagged_from_corpus(&calib_entries)?)?;
    }

    let entries = read_corpus(&args.dir)?;
    let (stems, dataset) = labeled_from_corpus(&entries, time_limit)?;
    let selector = SelectorConfig { mode, cv_threshold, learned_threshold, time_limit };
    let report = evaluate_hybrid(&dataset, &selector, model.as_ref())?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let report_text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::new(Code::Json, format!("route report: {e}")))?;
    write_file(&args.out.join("route_report.json"), &(report_text + "\n"))?;
    write_file(&args.out.join("route_instances.csv"), &route_rows_csv(&report, &stems))?;

    let mut manifest = RunManifest::new(
        "route",
        json!({
            "selector": args.selector,
            "cv_threshold": cv_threshold,
            "learned_threshold": learned_threshold,
            "time_limit_ms": time_limit.as_millis() as u64,
            "calibrated": args.calibrate_dir.is_some(),
        }),
    );
    manifest.inputs = vec![args.dir.display().to_string()];
    if let Some(p) = &args.model {
        manifest.inputs.push(p.display().to_string());
    }
    if let Some(p) = &args.calibrate_dir {
        manifest.inputs.push(p.display().to_string());
    }
    manifest.outputs = vec!["route_instances.csv".to_string(), "route_report.json".to_string()];
    manifest.wall_time_ms = started.elapsed().as_millis() as u64;
    write_manifest(&args.out, &manifest)
}
