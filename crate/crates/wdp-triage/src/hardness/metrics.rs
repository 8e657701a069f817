//! Regression and thresholded-classification metrics for trained models.
//!
//! The binary convention everywhere: an instance is "hard" when its gap is
//! strictly greater than the threshold, and the model flags "hard" when its
//! prediction is strictly greater than the same threshold.

use serde::{Deserialize, Serialize};

use crate::features::FeatureVector;
use crate::hardness::HardnessModel;
use crate::{Error, Result};

/// Metrics of one model on one labeled set at one threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: f64,
    pub pearson_r: f64,
    /// True when either side of the correlation had zero variance, in which
    /// case `pearson_r` is reported as 0 rather than NaN.
    pub pearson_degenerate: bool,
    pub threshold: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    /// Per-instance (predicted, true) gap pairs in input order.
    pub pairs: Vec<(f64, f64)>,
}

/// Runs the model over the set and scores it at the given threshold.
pub fn evaluate(
    model: &HardnessModel,
    features: &[FeatureVector],
    labels: &[f64],
    threshold: f64,
) -> Result<EvalReport> {
    let preds = predict_all(model, features, labels)?;
    evaluate_predictions(&preds, labels, threshold)
}

/// Same scoring on precomputed predictions; the seam used by tests that
/// cross-check the metric arithmetic.
pub fn evaluate_predictions(preds: &[f64], labels: &[f64], threshold: f64) -> Result<EvalReport> {
    if preds.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions but {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !threshold.is_finite() {
        return Err(Error::InvalidInput("threshold must be finite".to_string()));
    }
    let n = preds.len() as f64;
    let mae = preds.iter().zip(labels).map(|(p, y)| (p - y).abs()).sum::<f64>() / n;
    let (pearson_r, pearson_degenerate) = pearson(preds, labels);

    let mut tp = 0u64;
    let mut tn = 0u64;
    let mut fp = 0u64;
    let mut fn_ = 0u64;
    for (p, y) in preds.iter().zip(labels) {
        match (*p > threshold, *y > threshold) {
            (true, true) => tp += 1,
            (false, false) => tn += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
        }
    }
    Ok(EvalReport {
        mae,
        pearson_r,
        pearson_degenerate,
        threshold,
        accuracy: (tp + tn) as f64 / n,
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        pairs: preds.iter().copied().zip(labels.iter().copied()).collect(),
    })
}

/// Classification accuracy at every threshold in the grid. The model runs
/// once; only the thresholding is repeated.
pub fn threshold_sweep(
    model: &HardnessModel,
    features: &[FeatureVector],
    labels: &[f64],
    grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty threshold grid".to_string()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("thresholds must be finite".to_string()));
    }
    let preds = predict_all(model, features, labels)?;
    let n = labels.len() as f64;
    Ok(grid
        .iter()
        .map(|&theta| {
            let hits = preds
                .iter()
                .zip(labels)
                .filter(|(p, y)| (**p > theta) == (**y > theta))
                .count();
            (theta, hits as f64 / n)
        })
        .collect())
}

fn predict_all(
    model: &HardnessModel,
    features: &[FeatureVector],
    labels: &[f64],
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
    features.iter().map(|f| model.predict(f)).collect()
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Population Pearson correlation. Zero variance on either side is reported
/// as (0, true) instead of NaN.
fn pearson(xs: &[f64], ys: &[f64]) -> (f64, bool) {
    // An exactly constant side is degenerate by definition; checking up
    // front avoids the rounding residue a computed mean would leave behind.
    if xs.iter().all(|x| *x == xs[0]) || ys.iter().all(|y| *y == ys[0]) {
        return (0.0, true);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return (0.0, true);
    }
    (cov / (vx.sqrt() * vy.sqrt()), false)
}
