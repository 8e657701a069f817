//! Feature attribution: per-feature permutation importance and
//! leave-one-group-out retraining over the six structural feature groups.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector, FEATURE_COUNT};
use crate::hardness::{train, HardnessModel, TrainConfig};
use crate::{Error, Result};

/// A named subset of feature indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureGroup {
    pub name: String,
    pub indices: Vec<usize>,
}

/// The six structural groups the 20 features divide into. Order and sizes
/// are part of the reporting contract (1, 4, 1, 5, 4, 5).
pub fn feature_groups() -> Vec<FeatureGroup> {
    let group = |name: &str, indices: &[usize]| FeatureGroup {
        name: name.to_string(),
        indices: indices.to_vec(),
    };
    vec![
        group("value_congestion_corr", &[5]),
        group("bid_density", &[0, 1, 2, 3]),
        group("bottleneck_tightness", &[4]),
        group("capacity_utilization", &[10, 11, 12, 13, 14]),
        group("bid_value_statistics", &[6, 7, 8, 9]),
        group("conflict_structure", &[15, 16, 17, 18, 19]),
    ]
}

/// Mean MSE increase per feature after shuffling that feature's column on
/// the given set, averaged over `repeats` shuffles.
///
/// Rows are first brought into a canonical order, so the scores depend only
/// on the multiset of rows, not on their input order. A constant column
/// yields exactly 0: every shuffle of it is the identity.
pub fn permutation_importance(
    model: &HardnessModel,
    features: &[FeatureVector],
    labels: &[f64],
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".to_string()));
    }
    let n = features.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let row_cmp = features[a]
            .values
            .iter()
            .zip(&features[b].values)
            .map(|(x, y)| x.total_cmp(y))
            .find(|c| c.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal);
        row_cmp.then_with(|| labels[a].total_cmp(&labels[b]))
    });
    let rows: Vec<FeatureVector> = order.iter().map(|&i| features[i]).collect();
    let ys: Vec<f64> = order.iter().map(|&i| labels[i]).collect();

    let baseline = set_mse(model, &rows, &ys)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut work = rows.clone();
    let mut scores = vec![0.0; FEATURE_COUNT];
    for (j, score) in scores.iter_mut().enumerate() {
        let mut total = 0.0;
        for _ in 0..repeats {
            perm.shuffle(&mut rng);
            for (i, &src) in perm.iter().enumerate() {
                work[i].values[j] = rows[src].values[j];
            }
            total += set_mse(model, &work, &ys)? - baseline;
        }
        *score = total / repeats as f64;
        for (w, r) in work.iter_mut().zip(&rows) {
            w.values[j] = r.values[j];
        }
    }
    Ok(scores)
}

fn set_mse(model: &HardnessModel, rows: &[FeatureVector], ys: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (row, y) in rows.iter().zip(ys) {
        let d = model.predict(row)? - y;
        total += d * d;
    }
    Ok(total / rows.len() as f64)
}

/// One leave-one-group-out row: the group, its size, the MAE of a model
/// retrained with the group's columns zeroed, and the change vs. baseline.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogoRow {
    pub group: String,
    pub size: usize,
    pub mae_without: f64,
    pub delta_mae: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogoReport {
    pub baseline_mae: f64,
    pub rows: Vec<LogoRow>,
}

/// Leave-one-group-out ablation: per group, zero the group's columns across
/// the whole dataset, retrain from scratch, and measure held-out MAE.
///
/// The 80/20 train/holdout split is fixed once from `config.rng_seed`, then
/// every run (baseline and each group, for each seed in `seeds`) reuses it;
/// reported numbers are means over the seeds. Zeroing a group whose columns
/// are already all zero leaves the data bit-identical, so its row reproduces
/// the baseline MAE exactly.
pub fn logo_ablation(
    features: &[FeatureVector],
    labels: &[f64],
    groups: &[FeatureGroup],
    config: &TrainConfig,
    seeds: &[u64],
) -> Result<LogoReport> {
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidInput("at least one seed is required".to_string()));
    }
    let mut coverage = [0usize; FEATURE_COUNT];
    for g in groups {
        for &idx in &g.indices {
            if idx >= FEATURE_COUNT {
                return Err(Error::InvalidInput(format!("feature index {idx} out of range")));
            }
            coverage[idx] += 1;
        }
    }
    if coverage.iter().any(|&c| c != 1) {
        return Err(Error::InvalidInput(format!(
            "groups must partition the {FEATURE_COUNT} features"
        )));
    }

    let n = features.len();
    if n < 2 {
        return Err(Error::DatasetTooSmall { got: n, min: 2 });
    }
    // Shared split: identical across seeds and across group runs.
    let mut split_rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut split_rng);
    let holdout_count = ((n as f64 * 0.2).round() as usize).clamp(1, n - 1);
    let (fit_idx, holdout_idx) = order.split_at(n - holdout_count);

    let run = |data: &[FeatureVector], seed: u64| -> Result<f64> {
        let fit_f: Vec<FeatureVector> = fit_idx.iter().map(|&i| data[i]).collect();
        let fit_y: Vec<f64> = fit_idx.iter().map(|&i| labels[i]).collect();
        let seed_config = TrainConfig { rng_seed: seed, ..config.clone() };
        let (model, _) = train(&fit_f, &fit_y, &seed_config)?;
        let mut total = 0.0;
        for &i in holdout_idx {
            total += (model.predict(&data[i])? - labels[i]).abs();
        }
        Ok(total / holdout_idx.len() as f64)
    };

    let mut baseline_sum = 0.0;
    let mut group_sums = vec![0.0; groups.len()];
    for &seed in seeds {
        baseline_sum += run(features, seed)?;
        for (g, sum) in groups.iter().zip(group_sums.iter_mut()) {
            let mut zeroed = features.to_vec();
            for row in zeroed.iter_mut() {
                for &idx in &g.indices {
                    row.values[idx] = 0.0;
                }
            }
            *sum += run(&zeroed, seed)?;
        }
    }

    let seed_count = seeds.len() as f64;
    let baseline_mae = baseline_sum / seed_count;
    let rows = groups
        .iter()
        .zip(&group_sums)
        .map(|(g, sum)| {
            let mae_without = sum / seed_count;
            LogoRow {
                group: g.name.clone(),
                size: g.indices.len(),
                mae_without,
                delta_mae: mae_without - baseline_mae,
            }
        })
        .collect();
    Ok(LogoReport { baseline_mae, rows })
}
