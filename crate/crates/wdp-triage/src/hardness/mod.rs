//! Learned hardness estimation: a small MLP regressor that maps the 20
//! structural features to a predicted greedy gap in [0, 1], plus its
//! training loop, evaluation metrics, and ablation tooling.
//!
//! The network is written out by hand (flat parameter vector, analytic
//! backprop) rather than pulled from a framework: it is small enough that a
//! framework buys nothing, and the flat layout makes the finite-difference
//! gradient check and bit-exact determinism straightforward.

mod ablation;
mod fit;
mod metrics;
mod net;

pub use ablation::{feature_groups, logo_ablation, permutation_importance, FeatureGroup, LogoReport, LogoRow};
pub use metrics::{evaluate, evaluate_predictions, threshold_sweep, EvalReport};
pub use net::{Net, PARAM_COUNT};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureVector, FEATURE_COUNT};
use crate::{Error, Result};

/// Minimum labeled sample count accepted by [`train`].
pub const MIN_TRAIN_SET: usize = 50;

const MODEL_SCHEMA_VERSION: u32 = 1;

/// Hyperparameters for [`train`]. Defaults follow the usual AdamW recipe for
/// small regressors; `rng_seed` fixes initialization, the train/validation
/// split, and every shuffle, so equal seeds give bit-identical models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> TrainConfig {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            weight_decay: 1e-5,
            batch_size: 32,
            max_epochs: 200,
            patience: 10,
            validation_fraction: 0.2,
            rng_seed: 42,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning_rate must be positive and finite");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("moment coefficients must lie in [0, 1)");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay must be non-negative and finite");
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return bad("batch_size, max_epochs, and patience must be at least 1");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie strictly between 0 and 1");
        }
        Ok(())
    }
}

/// Summary of one training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_mse: f64,
    pub train_samples: usize,
    pub val_samples: usize,
}

/// A trained gap regressor: network weights, batch-norm running statistics,
/// and the per-feature standardization fitted on the training split.
#[derive(Debug, Clone)]
pub struct HardnessModel {
    net: Net,
    input_mean: Vec<f64>,
    input_std: Vec<f64>,
    trained: bool,
}

impl HardnessModel {
    /// Freshly initialized, untrained model. Prediction refuses to run on it;
    /// it exists for error-path tests and as a deserialization placeholder.
    pub fn untrained(seed: u64) -> HardnessModel {
        HardnessModel {
            net: Net::init(seed),
            input_mean: vec![0.0; FEATURE_COUNT],
            input_std: vec![1.0; FEATURE_COUNT],
            trained: false,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    fn standardize(&self, features: &FeatureVector) -> Vec<f64> {
        features
            .values
            .iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(x, (mu, sd))| (x - mu) / sd)
            .collect()
    }

    /// Predicted greedy gap, clamped to [0, 1]. Deterministic: inference uses
    /// the stored running statistics, never batch statistics.
    pub fn predict(&self, features: &FeatureVector) -> Result<f64> {
        if !self.trained {
            return Err(Error::UntrainedModel);
        }
        let raw = self.net.forward_eval(&self.standardize(features));
        debug_assert!(raw.is_finite(), "regressor produced a non-finite output");
        Ok(raw.clamp(0.0, 1.0))
    }

    /// Diagnostic forward pass that normalizes with the statistics of the
    /// given batch instead of the stored running averages. Unclamped; exposes
    /// the train/eval behavior difference of batch normalization.
    pub fn predict_batch_mode(&self, rows: &[FeatureVector]) -> Result<Vec<f64>> {
        if !self.trained {
            return Err(Error::UntrainedModel);
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut x = Vec::with_capacity(rows.len() * FEATURE_COUNT);
        for row in rows {
            x.extend(self.standardize(row));
        }
        Ok(self.net.forward_batch_stats(&x, rows.len()))
    }

    pub fn to_json(&self) -> String {
        let dto = ModelJson::from_model(self);
        serde_json::to_string_pretty(&dto).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<HardnessModel> {
        let dto: ModelJson = serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))?;
        dto.into_model()
    }
}

/// Trains the regressor on feature/gap pairs.
///
/// Standardizes inputs with statistics of the internal training split,
/// minimizes batch MSE with decoupled weight decay, and keeps the parameters
/// of the epoch with the lowest validation MSE. Given equal inputs and seed,
/// two runs produce bit-identical models.
pub fn train(
    features: &[FeatureVector],
    labels: &[f64],
    config: &TrainConfig,
) -> Result<(HardnessModel, TrainReport)> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::InvalidInput(format!(
            "{} feature rows but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let n = features.len();
    if n < MIN_TRAIN_SET {
        return Err(Error::DatasetTooSmall { got: n, min: MIN_TRAIN_SET });
    }
    for row in features {
        if row.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite feature value".to_string()));
        }
    }
    if labels.iter().any(|g| !g.is_finite() || *g < 0.0 || *g > 1.0) {
        return Err(Error::InvalidInput("labels must be gaps in [0, 1]".to_string()));
    }
    let first = labels[0];
    if labels.iter().all(|g| *g == first) {
        return Err(Error::DegenerateLabels);
    }

    // One RNG stream drives everything, in a fixed order: parameter
    // initialization, then the split shuffle, then per-epoch shuffles.
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut net = Net::init_with(&mut rng);

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let val_count = ((n as f64 * config.validation_fraction).round() as usize).clamp(1, n - 1);
    let train_count = n - val_count;
    if train_count < 2 {
        return Err(Error::InvalidConfig(
            "validation_fraction leaves fewer than 2 training samples".to_string(),
        ));
    }
    let (train_idx, val_idx) = order.split_at(train_count);

    let (mean, std) = column_stats(features, train_idx);
    let pack = |idx: &[usize]| -> Vec<f64> {
        let mut x = Vec::with_capacity(idx.len() * FEATURE_COUNT);
        for &i in idx {
            for j in 0..FEATURE_COUNT {
                x.push((features[i].values[j] - mean[j]) / std[j]);
            }
        }
        x
    };
    let x_train = pack(train_idx);
    let y_train: Vec<f64> = train_idx.iter().map(|&i| labels[i]).collect();
    let x_val = pack(val_idx);
    let y_val: Vec<f64> = val_idx.iter().map(|&i| labels[i]).collect();

    let outcome = fit::fit(&mut net, &x_train, &y_train, &x_val, &y_val, config, &mut rng);

    let model = HardnessModel { net, input_mean: mean, input_std: std, trained: true };
    let report = TrainReport {
        epochs_run: outcome.epochs_run,
        best_epoch: outcome.best_epoch,
        best_val_mse: outcome.best_val_mse,
        train_samples: train_count,
        val_samples: val_count,
    };
    Ok((model, report))
}

/// Population mean and standard deviation per feature column over the given
/// rows. Zero-variance columns get std 1 so standardization is the identity
/// shift there instead of a division by zero.
fn column_stats(features: &[FeatureVector], rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let nf = rows.len() as f64;
    let mut mean = vec![0.0; FEATURE_COUNT];
    for &i in rows {
        for (m, v) in mean.iter_mut().zip(&features[i].values) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= nf;
    }
    let mut std = vec![0.0; FEATURE_COUNT];
    for &i in rows {
        for ((s, m), v) in std.iter_mut().zip(&mean).zip(&features[i].values) {
            let d = v - m;
            *s += d * d;
        }
    }
    for s in std.iter_mut() {
        *s = (*s / nf).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    (mean, std)
}

#[derive(Serialize, Deserialize)]
struct BnJson {
    gamma: Vec<f64>,
    beta: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
}

/// On-disk model layout: nested arrays per tensor plus the standardization
/// statistics, guarded by a schema version.
#[derive(Serialize, Deserialize)]
struct ModelJson {
    schema_version: u32,
    trained: bool,
    input_mean: Vec<f64>,
    input_std: Vec<f64>,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    bn1: BnJson,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
    bn2: BnJson,
    w3: Vec<f64>,
    b3: f64,
}

impl ModelJson {
    fn from_model(model: &HardnessModel) -> ModelJson {
        let theta = model.net.theta();
        let rows = |off: usize, out: usize, inp: usize| -> Vec<Vec<f64>> {
            (0..out).map(|o| theta[off + o * inp..off + (o + 1) * inp].to_vec()).collect()
        };
        let (rm1, rv1, rm2, rv2) = model.net.running_stats();
        ModelJson {
            schema_version: MODEL_SCHEMA_VERSION,
            trained: model.trained,
            input_mean: model.input_mean.clone(),
            input_std: model.input_std.clone(),
            w1: rows(net::W1, net::HID, net::IN),
            b1: theta[net::B1..net::G1].to_vec(),
            bn1: BnJson {
                gamma: theta[net::G1..net::BE1].to_vec(),
                beta: theta[net::BE1..net::W2].to_vec(),
                running_mean: rm1.to_vec(),
                running_var: rv1.to_vec(),
            },
            w2: rows(net::W2, net::HID, net::HID),
            b2: theta[net::B2..net::G2].to_vec(),
            bn2: BnJson {
                gamma: theta[net::G2..net::BE2].to_vec(),
                beta: theta[net::BE2..net::W3].to_vec(),
                running_mean: rm2.to_vec(),
                running_var: rv2.to_vec(),
            },
            w3: theta[net::W3..net::B3].to_vec(),
            b3: theta[net::B3],
        }
    }

    fn into_model(self) -> Result<HardnessModel> {
        let schema = |msg: String| Error::Json(msg);
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(schema(format!(
                "unsupported model schema version {}",
                self.schema_version
            )));
        }
        let check = |name: &str, got: usize, want: usize| -> Result<()> {
            if got != want {
                return Err(Error::Json(format!("{name}: expected {want} entries, got {got}")));
            }
            Ok(())
        };
        check("input_mean", self.input_mean.len(), net::IN)?;
        check("input_std", self.input_std.len(), net::IN)?;
        check("w1", self.w1.len(), net::HID)?;
        check("w2", self.w2.len(), net::HID)?;
        check("w3", self.w3.len(), net::HID)?;
        check("b1", self.b1.len(), net::HID)?;
        check("b2", self.b2.len(), net::HID)?;
        for row in &self.w1 {
            check("w1 row", row.len(), net::IN)?;
        }
        for row in &self.w2 {
            check("w2 row", row.len(), net::HID)?;
        }
        for bn in [&self.bn1, &self.bn2] {
            check("bn gamma", bn.gamma.len(), net::HID)?;
            check("bn beta", bn.beta.len(), net::HID)?;
            check("bn running_mean", bn.running_mean.len(), net::HID)?;
            check("bn running_var", bn.running_var.len(), net::HID)?;
        }
        let mut theta = Vec::with_capacity(PARAM_COUNT);
        theta.extend(self.w1.iter().flatten());
        theta.extend(&self.b1);
        theta.extend(&self.bn1.gamma);
        theta.extend(&self.bn1.beta);
        theta.extend(self.w2.iter().flatten());
        theta.extend(&self.b2);
        theta.extend(&self.bn2.gamma);
        theta.extend(&self.bn2.beta);
        theta.extend(&self.w3);
        theta.push(self.b3);
        let net = Net::from_raw(
            theta,
            self.bn1.running_mean,
            self.bn1.running_var,
            self.bn2.running_mean,
            self.bn2.running_var,
        );
        Ok(HardnessModel {
            net,
            input_mean: self.input_mean,
            input_std: self.input_std,
            trained: self.trained,
        })
    }
}
