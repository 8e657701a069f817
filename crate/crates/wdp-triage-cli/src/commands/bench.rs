//! `bench`: run the routing-policy gallery over one labeled directory and
//! report what each policy gives up against the known optima.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use clap::Args;
use serde::Serialize;
use serde_json::json;
use wdp_triage::{
    calibrate_cv_threshold, evaluate_hybrid, HardnessModel, HybridReport, LabeledInstance,
    SelectorConfig, SelectorMode, Tag,
};

use crate::commands::route::{load_model, route_rows_csv};
use crate::commands::{labeled_from_corpus, tagged_from_corpus};
use crate::config::ToolConfig;
use crate::dataio::{read_corpus, write_file};
use crate::error::{CliError, CliResult};
use crate::manifest::{write_manifest, RunManifest};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Labeled instance directory, from `generate`.
    #[arg(long)]
    pub dir: PathBuf,
    /// Output directory; receives hybrid.json, hybrid_instances.csv.
    #[arg(long)]
    pub out: PathBuf,
    /// Trained model JSON; enables the learned arm.
    #[arg(long)]
    pub model: Option<PathBuf>,
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

#[derive(Debug, Serialize)]
pub struct MethodSummary {
    pub hard_gap_mean: f64,
    pub easy_gap_mean: f64,
    pub overall_gap_mean: f64,
    pub routing_accuracy: f64,
    pub expensive_fraction: f64,
}

impl MethodSummary {
    fn from_report(report: &HybridReport) -> MethodSummary {
        let expensive = report.rows.iter().filter(|r| r.routed_expensive).count();
        MethodSummary {
            hard_gap_mean: report.hard_gap_mean,
            easy_gap_mean: report.easy_gap_mean,
            overall_gap_mean: report.overall_gap_mean,
            routing_accuracy: report.routing_accuracy,
            expensive_fraction: expensive as f64 / report.rows.len() as f64,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BenchBundle {
    pub cv_threshold: f64,
    pub calibrated: bool,
    pub learned_threshold: f64,
    pub instances: usize,
    pub hard: usize,
    pub easy: usize,
    pub methods: BTreeMap<String, MethodSummary>,
}

/// Runs every routing policy over the set: both degenerate baselines, the
/// two real selectors (learned only when a model is present), and the
/// tag-oracle upper bound. The model, when given, annotates every policy's
/// rows with predicted gaps without influencing non-learned decisions.
pub fn method_gallery(
    dataset: &[LabeledInstance],
    stems: &[String],
    cv_threshold: f64,
    learned_threshold: f64,
    time_limit: Duration,
    model: Option<&HardnessModel>,
) -> CliResult<(BTreeMap<String, MethodSummary>, String)> {
    let base = SelectorConfig {
        mode: SelectorMode::CvThreshold,
        cv_threshold,
        learned_threshold,
        time_limit,
    };
    let mut arms: Vec<(&str, SelectorConfig)> = vec![
        // CVs are never negative, so a threshold of -1 routes nothing to the
        // exact solver; f64::MAX routes everything there.
        ("greedy_only", SelectorConfig { cv_threshold: -1.0, ..base.clone() }),
        ("exact_only", SelectorConfig { cv_threshold: f64::MAX, ..base.clone() }),
        ("hybrid_cv", base.clone()),
    ];
    if model.is_some() {
        arms.push(("hybrid_learned", SelectorConfig { mode: SelectorMode::Learned, ..base.clone() }));
    }
    arms.push(("hybrid_oracle", SelectorConfig { mode: SelectorMode::Oracle, ..base }));

    let mut methods = BTreeMap::new();
    let mut csv = String::from("method,instance,tag,decision,gap,cv,predicted_gap\n");
    for (name, selector) in arms {
        let report = evaluate_hybrid(dataset, &selector, model)?;
        for line in route_rows_csv(&report, stems).lines().skip(1) {
            csv.push_str(name);
            csv.push(',');
            csv.push_str(line);
            csv.push('\n');
        }
        methods.insert(name.to_string(), MethodSummary::from_report(&report));
    }
    Ok((methods, csv))
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let started = Instant::now();
    let cfg = ToolConfig::load(args.config.as_deref())?;
    let time_limit = Duration::from_millis(args.time_limit_ms.unwrap_or(cfg.route.time_limit_ms));

    let model = match &args.model {
        Some(path) => Some(load_model(path)?),
        None => None,
    };
    let cv_threshold = match &args.calibrate_dir {
        Some(dir) => {
            let calib_entries = read_corpus(dir)?;
            calibrate_cv_threshold(&tagged_from_corpus(&calib_entries)?)?
        }
        None => cfg.route.cv_threshold,
    };

    let entries = read_corpus(&args.dir)?;
    let (stems, dataset) = labeled_from_corpus(&entries, time_limit)?;
    let (methods, csv) = method_gallery(
        &dataset,
        &stems,
        cv_threshold,
        cfg.route.learned_threshold,
        time_limit,
        model.as_ref(),
    )?;
    let bundle = BenchBundle {
        cv_threshold,
        calibrated: args.calibrate_dir.is_some(),
        learned_threshold: cfg.route.learned_threshold,
        instances: dataset.len(),
        hard: dataset.iter().filter(|l| l.tag == Tag::Hard).count(),
        easy: dataset.iter().filter(|l| l.tag == Tag::Easy).count(),
        methods,
    };

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let bundle_text = serde_json::to_string_pretty(&bundle)
        .map_err(|e| CliError::new(crate::error::Code::Json, format!("bench bundle: {e}")))?;
    write_file(&args.out.join("hybrid.json"), &(bundle_text + "\n"))?;
    write_file(&args.out.join("hybrid_instances.csv"), &csv)?;

    let mut manifest = RunManifest::new(
        "bench",
        json!({
            "cv_threshold": cv_threshold,
            "calibrated": args.calibrate_dir.is_some(),
            "learned_threshold": cfg.route.learned_threshold,
            "time_limit_ms": time_limit.as_millis() as u64,
        }),
    );
    manifest.inputs = vec![args.dir.display().to_string()];
    if let Some(p) = &args.model {
        manifest.inputs.push(p.display().to_string());
    }
    if let Some(p) = &args.calibrate_dir {
        manifest.inputs.push(p.display().to_string());
    }
    manifest.outputs = vec!["hybrid.json".to_string(), "hybrid_instances.csv".to_string()];
    manifest.wall_time_ms = started.elapsed().as_millis() as u64;
    write_manifest(&args.out, &manifest)
}
