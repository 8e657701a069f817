//! `pipeline`: the whole study in one run. Generates the four dataset
//! splits, labels them, extracts features, trains one model per seed,
//! evaluates with a threshold sweep, runs both ablations, and finishes with
//! the hybrid routing benchmark. Every artifact lands in one output bundle;
//! any stage failure aborts the run with the failing stage named in the
//! manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Args;
use rayon::prelude::*;
use wdp_triage::{
    bid_density_cv, calibrate_cv_threshold, evaluate, extract, feature_groups, gen_mixed,
    logo_ablation, permutation_importance, threshold_sweep, EvalReport, FeatureVector,
    HardnessModel, LabeledInstance, MixConfig, Tag, TaggedInstance, TrainReport, FEATURE_NAMES,
};

use crate::commands::bench::{method_gallery, BenchBundle};
use crate::commands::eval::sweep_csv_text;
use crate::commands::route::load_model;
use crate::commands::{label_batch, Labeled};
use crate::config::ToolConfig;
use crate::dataio::{features_csv_text, write_file};
use crate::error::{CliError, CliResult, Code};
use crate::manifest::{write_manifest, RunManifest};

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Output directory; receives the whole results bundle.
    #[arg(long)]
    pub out: PathBuf,
    /// Optional TOML config; defaults cover every section.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides [generate].data_seed, shifting all four dataset splits.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Stage failures carry the stage name so the manifest can record it.
type StageResult<T> = Result<T, (&'static str, CliError)>;

fn stage<T>(name: &'static str, body: impl FnOnce() -> CliResult<T>) -> StageResult<T> {
    body().map_err(|e| (name, e))
}

pub fn run(args: &PipelineArgs) -> CliResult<()> {
    let started = Instant::now();
    let mut cfg = ToolConfig::load(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.generate.data_seed = seed;
    }
    if cfg.train.seeds.is_empty() {
        return Err(CliError::new(Code::Config, "[train].seeds must not be empty"));
    }
    fs::create_dir_all(args.out.join("models")).map_err(|e| CliError::io(&args.out, e))?;

    let mut manifest = RunManifest::new("pipeline", cfg.echo());
    manifest.seeds = cfg.train.seeds.clone();
    if let Some(p) = &args.config {
        manifest.inputs.push(p.display().to_string());
    }

    match run_stages(&cfg, &args.out) {
        Ok(outputs) => {
            manifest.outputs = outputs;
            manifest.wall_time_ms = started.elapsed().as_millis() as u64;
            write_manifest(&args.out, &manifest)
        }
        Err((stage_name, err)) => {
            manifest.failed_stage = Some(stage_name.to_string());
            manifest.wall_time_ms = started.elapsed().as_millis() as u64;
            // The abort record matters more than the abort reason surviving
            // a second I/O failure, so this write is best effort.
            let _ = write_manifest(&args.out, &manifest);
            Err(CliError::new(Code::Pipeline, format!("stage '{stage_name}': {}", err.message)))
        }
    }
}

fn run_stages(cfg: &ToolConfig, out: &Path) -> StageResult<Vec<String>> {
    let mut outputs: Vec<String> = Vec::new();
    let label_limit = Duration::from_millis(cfg.generate.label_time_limit_ms);
    let route_limit = Duration::from_millis(cfg.route.time_limit_ms);

    // The learned-routing model named in [route].model is a bench-stage
    // input; checking it up front saves the minutes the earlier stages take.
    let pretrained: Option<&str> = match cfg.route.model.as_str() {
        "" => None,
        path => Some(path),
    };
    if let Some(path) = pretrained {
        if !Path::new(path).exists() {
            return Err((
                "bench",
                CliError::new(Code::Model, format!("learned-routing model not found: {path}")),
            ));
        }
    }

    let (train_set, test_set, calib_set, route_set) = stage("generate", || {
        let g = &cfg.generate;
        let mk = |hard: usize, easy: usize, offset: u64| {
            gen_mixed(&MixConfig {
                n_hard: hard,
                n_easy: easy,
                rng_seed: g.data_seed + offset,
                ..MixConfig::default()
            })
            .map_err(CliError::from)
        };
        Ok((
            mk(g.n_train_hard, g.n_train_easy, 0)?,
            mk(g.n_test_hard, g.n_test_easy, 1)?,
            mk(g.n_calib_hard, g.n_calib_easy, 2)?,
            mk(g.n_route_hard, g.n_route_easy, 3)?,
        ))
    })?;

    let (train_labels, test_labels, route_labels) = stage("label", || {
        Ok((
            label_batch(&train_set, label_limit)?,
            label_batch(&test_set, label_limit)?,
            label_batch(&route_set, label_limit)?,
        ))
    })?;
    let train_gaps: Vec<f64> = train_labels.iter().map(|l| l.label.greedy_gap).collect();
    let test_gaps: Vec<f64> = test_labels.iter().map(|l| l.label.greedy_gap).collect();

    let (train_rows, test_rows) = stage("features", || {
        let fx = |set: &[TaggedInstance]| -> CliResult<Vec<FeatureVector>> {
            set.par_iter().map(|t| extract(&t.instance).map_err(CliError::from)).collect()
        };
        let train_rows = fx(&train_set)?;
        let test_rows = fx(&test_set)?;
        let names = |set: &[TaggedInstance]| -> Vec<String> {
            set.iter().map(|t| t.instance.name.clone()).collect()
        };
        write_file(
            &out.join("features_train.csv"),
            &features_csv_text(&names(&train_set), &train_rows, Some(&train_gaps)),
        )?;
        write_file(
            &out.join("features_test.csv"),
            &features_csv_text(&names(&test_set), &test_rows, Some(&test_gaps)),
        )?;
        Ok((train_rows, test_rows))
    })?;
    outputs.push("features_train.csv".to_string());
    outputs.push("features_test.csv".to_string());

    let models: Vec<(u64, HardnessModel, TrainReport)> = stage("train", || {
        cfg.train
            .seeds
            .iter()
            .map(|&seed| {
                let (model, report) =
                    wdp_triage::train(&train_rows, &train_gaps, &cfg.train.train_config(seed))?;
                write_file(
                    &out.join(format!("models/model_seed{seed}.json")),
                    &(model.to_json() + "\n"),
                )?;
                let report_text = serde_json::to_string_pretty(&report)
                    .map_err(|e| CliError::new(Code::Json, format!("train report: {e}")))?;
                write_file(
                    &out.join(format!("train_report_seed{seed}.json")),
                    &(report_text + "\n"),
                )?;
                Ok((seed, model, report))
            })
            .collect()
    })?;
    for (seed, _, _) in &models {
        outputs.push(format!("models/model_seed{seed}.json"));
        outputs.push(format!("train_report_seed{seed}.json"));
    }

    stage("eval", || {
        let grid = cfg.eval.sweep_grid();
        let mut metrics = String::from("Seed,MAE,Correlation,Accuracy,Precision,Recall\n");
        let mut sums = [0.0f64; 5];
        for (seed, model, _) in &models {
            let report: EvalReport = evaluate(model, &test_rows, &test_gaps, cfg.eval.threshold)?;
            let report_text = serde_json::to_string_pretty(&report)
                .map_err(|e| CliError::new(Code::Json, format!("eval report: {e}")))?;
            write_file(&out.join(format!("eval_seed{seed}.json")), &(report_text + "\n"))?;
            let sweep = threshold_sweep(model, &test_rows, &test_gaps, &grid)?;
            write_file(&out.join(format!("sweep_seed{seed}.csv")), &sweep_csv_text(&sweep))?;
            let row = [report.mae, report.pearson_r, report.accuracy, report.precision, report.recall];
            for (sum, value) in sums.iter_mut().zip(row) {
                *sum += value;
            }
            metrics.push_str(&format!(
                "{seed},{},{},{},{},{}\n",
                row[0], row[1], row[2], row[3], row[4]
            ));
        }
        let n = models.len() as f64;
        metrics.push_str(&format!(
            "mean,{},{},{},{},{}\n",
            sums[0] / n,
            sums[1] / n,
            sums[2] / n,
            sums[3] / n,
            sums[4] / n
        ));
        write_file(&out.join("metrics.csv"), &metrics)
    })?;
    for (seed, _, _) in &models {
        outputs.push(format!("eval_seed{seed}.json"));
        outputs.push(format!("sweep_seed{seed}.csv"));
    }
    outputs.push("metrics.csv".to_string());

    stage("ablate", || {
        let first = &models[0];
        let importances =
            permutation_importance(&first.1, &test_rows, &test_gaps, cfg.ablate.perm_repeats, cfg.ablate.perm_seed)?;
        let mut perm = String::from("feature,importance\n");
        for (name, score) in FEATURE_NAMES.iter().zip(&importances) {
            perm.push_str(&format!("{name},{score}\n"));
        }
        write_file(&out.join("perm_importance.csv"), &perm)?;

        let logo = logo_ablation(
            &train_rows,
            &train_gaps,
            &feature_groups(),
            &cfg.train.train_config(first.0),
            &cfg.train.seeds,
        )?;
        let mut table = String::from("group,size,mae_without,delta_mae\n");
        table.push_str(&format!("baseline,0,{},0\n", logo.baseline_mae));
        for row in &logo.rows {
            table.push_str(&format!("{},{},{},{}\n", row.group, row.size, row.mae_without, row.delta_mae));
        }
        write_file(&out.join("logo.csv"), &table)
    })?;
    outputs.push("perm_importance.csv".to_string());
    outputs.push("logo.csv".to_string());

    stage("bench", || {
        let mut histogram = String::from("instance,tag,cv\n");
        for tagged in &calib_set {
            let tag = match tagged.tag {
                Tag::Hard => "hard",
                Tag::Easy => "easy",
            };
            let cv = bid_density_cv(&tagged.instance)?;
            histogram.push_str(&format!("{},{tag},{cv}\n", tagged.instance.name));
        }
        write_file(&out.join("cv_histogram.csv"), &histogram)?;

        let cv_threshold = if cfg.route.auto_calibrate {
            calibrate_cv_threshold(&calib_set)?
        } else {
            cfg.route.cv_threshold
        };
        let loaded: HardnessModel;
        let learned_model: &HardnessModel = match pretrained {
            Some(path) => {
                loaded = load_model(Path::new(path))?;
                &loaded
            }
            None => &models[0].1,
        };
        let dataset: Vec<LabeledInstance> = route_set
            .iter()
            .zip(&route_labels)
            .map(|(t, l): (&TaggedInstance, &Labeled)| LabeledInstance {
                instance: t.instance.clone(),
                tag: t.tag,
                optimal_welfare: l.optimal_welfare,
            })
            .collect();
        let stems: Vec<String> = route_set.iter().map(|t| t.instance.name.clone()).collect();
        let (methods, csv) = method_gallery(
            &dataset,
            &stems,
            cv_threshold,
            cfg.route.learned_threshold,
            route_limit,
            Some(learned_model),
        )?;
        let bundle = BenchBundle {
            cv_threshold,
            calibrated: cfg.route.auto_calibrate,
            learned_threshold: cfg.route.learned_threshold,
            instances: dataset.len(),
            hard: dataset.iter().filter(|l| l.tag == Tag::Hard).count(),
            easy: dataset.iter().filter(|l| l.tag == Tag::Easy).count(),
            methods,
        };
        let bundle_text = serde_json::to_string_pretty(&bundle)
            .map_err(|e| CliError::new(Code::Json, format!("bench bundle: {e}")))?;
        write_file(&out.join("hybrid.json"), &(bundle_text + "\n"))?;
        write_file(&out.join("hybrid_instances.csv"), &csv)
    })?;
    outputs.push("cv_histogram.csv".to_string());
    outputs.push("hybrid.json".to_string());
    outputs.push("hybrid_instances.csv".to_string());

    outputs.sort();
    Ok(outputs)
}
