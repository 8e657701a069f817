//! Tool configuration: a flat TOML file with one section per stage. Every
//! field has a default, so an absent file or an empty one is valid, and the
//! effective values always land in the run manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wdp_triage::TrainConfig;

use crate::dataio::read_to_string;
use crate::error::{CliError, CliResult, Code};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub generate: GenerateSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub ablate: AblateSection,
    pub route: RouteSection,
}

impl ToolConfig {
    /// Defaults when `path` is `None`; otherwise parses the file, rejecting
    /// unknown keys so typos surface instead of silently reverting to
    /// defaults.
    pub fn load(path: Option<&Path>) -> CliResult<ToolConfig> {
        match path {
            None => Ok(ToolConfig::default()),
            Some(p) => {
                let text = read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| CliError::new(Code::Config, format!("{}: {e}", p.display())))
            }
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serialization cannot fail")
    }
}

/// Dataset sizes and seeds for the pipeline's four splits. Each split draws
/// from its own seed offset, so the splits never share instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateSection {
    pub n_train_hard: usize,
    pub n_train_easy: usize,
    pub n_test_hard: usize,
    pub n_test_easy: usize,
    pub n_calib_hard: usize,
    pub n_calib_easy: usize,
    pub n_route_hard: usize,
    pub n_route_easy: usize,
    /// Base seed; the train/test/calibration/routing splits use
    /// `data_seed + 0..=3`.
    pub data_seed: u64,
    /// Exact-solver budget per uncertified instance when labeling.
    pub label_time_limit_ms: u64,
}

impl Default for GenerateSection {
    fn default() -> GenerateSection {
        GenerateSection {
            n_train_hard: 60,
            n_train_easy: 60,
            n_test_hard: 25,
            n_test_easy: 25,
            n_calib_hard: 20,
            n_calib_easy: 20,
            n_route_hard: 25,
            n_route_easy: 25,
            data_seed: 7,
            label_time_limit_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// One model is trained per seed; reports are aggregated across them.
    pub seeds: Vec<u64>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub weight_decay: f64,
}

impl Default for TrainSection {
    fn default() -> TrainSection {
        let lib = TrainConfig::default();
        TrainSection {
            seeds: vec![42, 123, 456],
            learning_rate: lib.learning_rate,
            batch_size: lib.batch_size,
            max_epochs: lib.max_epochs,
            patience: lib.patience,
            validation_fraction: lib.validation_fraction,
            weight_decay: lib.weight_decay,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            validation_fraction: self.validation_fraction,
            weight_decay: self.weight_decay,
            rng_seed: seed,
            ..TrainConfig::default()
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Gap threshold separating hard from easy for the classification view.
    pub threshold: f64,
    pub sweep_start: f64,
    pub sweep_step: f64,
    pub sweep_points: usize,
}

impl Default for EvalSection {
    fn default() -> EvalSection {
        EvalSection { threshold: 0.05, sweep_start: 0.006, sweep_step: 0.005, sweep_points: 17 }
    }
}

impl EvalSection {
    pub fn sweep_grid(&self) -> Vec<f64> {
        (0..self.sweep_points).map(|i| self.sweep_start + self.sweep_step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateSection {
    pub perm_repeats: usize,
    pub perm_seed: u64,
}

impl Default for AblateSection {
    fn default() -> AblateSection {
        AblateSection { perm_repeats: 3, perm_seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RouteSection {
    /// When true, the CV threshold is calibrated from the calibration split
    /// instead of taking `cv_threshold` as given.
    pub auto_calibrate: bool,
    pub cv_threshold: f64,
    pub learned_threshold: f64,
    /// Exact-solver budget on the expensive arm.
    pub time_limit_ms: u64,
    /// Optional pre-trained model for the learned arm; empty means use the
    /// first model trained in this run.
    pub model: String,
}

impl Default for RouteSection {
    fn default() -> RouteSection {
        RouteSection {
            auto_calibrate: true,
            cv_threshold: 0.35,
            learned_threshold: 0.05,
            time_limit_ms: 10_000,
            model: String::new(),
        }
    }
}
