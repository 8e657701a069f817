//! Instance triage: decide per instance whether the cheap greedy heuristic
//! is enough or the exact solver is worth its cost, then measure what the
//! resulting hybrid allocator gives up against known optima.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::features::{bid_density_cv, extract};
use crate::generators::{Tag, TaggedInstance};
use crate::hardness::HardnessModel;
use crate::model::WdpInstance;
use crate::solvers::{exact, greedy, welfare_gap, SolveResult};
use crate::{Error, Result};

/// How the router decides which arm an instance goes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectorMode {
    /// Expensive iff the bid-density CV is at or below `cv_threshold`; trap
    /// structure shows up as uniformly shared items, i.e. low CV.
    CvThreshold,
    /// Expensive iff the trained regressor predicts a gap above
    /// `learned_threshold`.
    Learned,
    /// Route by the ground-truth tag. Only [`evaluate_hybrid`] can honor
    /// this; plain routing has no tags to consult.
    Oracle,
}

/// Routing decision for one instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Cheap,
    Expensive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectorConfig {
    pub mode: SelectorMode,
    pub cv_threshold: f64,
    pub learned_threshold: f64,
    /// Budget handed to the exact solver on the expensive arm.
    pub time_limit: Duration,
}

impl Default for SelectorConfig {
    fn default() -> SelectorConfig {
        SelectorConfig {
            mode: SelectorMode::CvThreshold,
            cv_threshold: 0.35,
            learned_threshold: 0.05,
            time_limit: Duration::from_secs(10),
        }
    }
}

impl SelectorConfig {
    fn validate(&self) -> Result<()> {
        if !self.cv_threshold.is_finite() || !self.learned_threshold.is_finite() {
            return Err(Error::InvalidConfig("selector thresholds must be finite".to_string()));
        }
        if self.time_limit.is_zero() {
            return Err(Error::InvalidConfig("time limit must be positive".to_string()));
        }
        Ok(())
    }
}

/// Chooses an arm for one instance. Pure: same inputs, same decision.
///
/// A CV exactly at the threshold routes expensive; the cost of one wasted
/// exact call is small next to a missed trap. `cv_threshold = -1` therefore
/// sends everything cheap, since CVs are never negative.
pub fn select(
    instance: &WdpInstance,
    config: &SelectorConfig,
    model: Option<&HardnessModel>,
) -> Result<Route> {
    config.validate()?;
    match config.mode {
        SelectorMode::CvThreshold => {
            let cv = bid_density_cv(instance)?;
            Ok(if cv <= config.cv_threshold { Route::Expensive } else { Route::Cheap })
        }
        SelectorMode::Learned => {
            let model = model.ok_or(Error::MissingModel)?;
            let predicted = model.predict(&extract(instance)?)?;
            Ok(if predicted > config.learned_threshold { Route::Expensive } else { Route::Cheap })
        }
        SelectorMode::Oracle => Err(Error::InvalidConfig(
            "oracle routing needs tagged instances; use evaluate_hybrid".to_string(),
        )),
    }
}

/// Runs the chosen arm. The expensive arm also runs greedy and keeps the
/// better allocation: when the exact solver proves optimality it cannot
/// lose, but on a timeout its incumbent may trail the heuristic.
fn run_route(instance: &WdpInstance, route: Route, config: &SelectorConfig) -> Result<SolveResult> {
    match route {
        Route::Cheap => greedy(instance),
        Route::Expensive => {
            let exact_result = exact(instance, config.time_limit)?;
            let greedy_result = greedy(instance)?;
            if exact_result.allocation.welfare >= greedy_result.allocation.welfare {
                Ok(exact_result)
            } else {
                Ok(greedy_result)
            }
        }
    }
}

/// Routes one instance and solves it with the chosen arm.
pub fn hybrid_solve(
    instance: &WdpInstance,
    config: &SelectorConfig,
    model: Option<&HardnessModel>,
) -> Result<(SolveResult, Route)> {
    let route = select(instance, config, model)?;
    Ok((run_route(instance, route, config)?, route))
}

/// An instance with its ground-truth tag and known optimal welfare, the
/// inputs the evaluation harness scores against.
#[derive(Debug, Clone)]
pub struct LabeledInstance {
    pub instance: WdpInstance,
    pub tag: Tag,
    pub optimal_welfare: f64,
}

/// Per-instance routing outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteRow {
    pub name: String,
    pub tag: Tag,
    pub routed_expensive: bool,
    /// Gap of the welfare actually achieved against the known optimum.
    pub gap: f64,
    pub cv: f64,
    /// Regressor output, when a model was supplied.
    pub predicted_gap: Option<f64>,
}

/// Aggregate hybrid performance on a tagged, labeled set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HybridReport {
    /// Mean gap over hard instances; 0 when the set has none.
    pub hard_gap_mean: f64,
    /// Mean gap over easy instances; 0 when the set has none.
    pub easy_gap_mean: f64,
    pub overall_gap_mean: f64,
    /// Fraction of instances where (routed expensive) == (tagged hard).
    pub routing_accuracy: f64,
    pub rows: Vec<RouteRow>,
}

/// Routes and solves every labeled instance, then scores gaps against the
/// provided optima and routing decisions against the tags. Oracle mode
/// routes by tag and so always scores routing accuracy 1.
pub fn evaluate_hybrid(
    dataset: &[LabeledInstance],
    config: &SelectorConfig,
    model: Option<&HardnessModel>,
) -> Result<HybridReport> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate()?;
    let mut rows = Vec::with_capacity(dataset.len());
    let mut hard = (0.0, 0usize);
    let mut easy = (0.0, 0usize);
    let mut correct = 0usize;
    for labeled in dataset {
        if !labeled.optimal_welfare.is_finite() {
            return Err(Error::InvalidInput(format!(
                "instance {} has a non-finite optimal welfare",
                labeled.instance.name
            )));
        }
        let route = match config.mode {
            SelectorMode::Oracle => {
                if labeled.tag == Tag::Hard {
                    Route::Expensive
                } else {
                    Route::Cheap
                }
            }
            _ => select(&labeled.instance, config, model)?,
        };
        let result = run_route(&labeled.instance, route, config)?;
        let gap = welfare_gap(labeled.optimal_welfare, result.allocation.welfare);
        let cv = bid_density_cv(&labeled.instance)?;
        let predicted_gap = match model {
            Some(m) => Some(m.predict(&extract(&labeled.instance)?)?),
            None => None,
        };
        let routed_expensive = route == Route::Expensive;
        if routed_expensive == (labeled.tag == Tag::Hard) {
            correct += 1;
        }
        match labeled.tag {
            Tag::Hard => {
                hard.0 += gap;
                hard.1 += 1;
            }
            Tag::Easy => {
                easy.0 += gap;
                easy.1 += 1;
            }
        }
        rows.push(RouteRow {
            name: labeled.instance.name.clone(),
            tag: labeled.tag,
            routed_expensive,
            gap,
            cv,
            predicted_gap,
        });
    }
    let mean = |(sum, count): (f64, usize)| if count == 0 { 0.0 } else { sum / count as f64 };
    let overall = rows.iter().map(|r| r.gap).sum::<f64>() / rows.len() as f64;
    Ok(HybridReport {
        hard_gap_mean: mean(hard),
        easy_gap_mean: mean(easy),
        overall_gap_mean: overall,
        routing_accuracy: correct as f64 / rows.len() as f64,
        rows,
    })
}

/// Raw bid-density CV values split by tag, for threshold calibration and
/// distribution plots.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvHistogram {
    pub hard: Vec<f64>,
    pub easy: Vec<f64>,
    pub max_hard: Option<f64>,
    pub min_easy: Option<f64>,
}

pub fn cv_histogram(dataset: &[TaggedInstance]) -> Result<CvHistogram> {
    let mut hard = Vec::new();
    let mut easy = Vec::new();
    for tagged in dataset {
        let cv = bid_density_cv(&tagged.instance)?;
        match tagged.tag {
            Tag::Hard => hard.push(cv),
            Tag::Easy => easy.push(cv),
        }
    }
    let max_hard = hard.iter().copied().reduce(f64::max);
    let min_easy = easy.iter().copied().reduce(f64::min);
    Ok(CvHistogram { hard, easy, max_hard, min_easy })
}

/// Midpoint between the highest hard CV and the lowest easy CV on a
/// calibration set. Needs at least one instance of each tag.
pub fn calibrate_cv_threshold(dataset: &[TaggedInstance]) -> Result<f64> {
    let histogram = cv_histogram(dataset)?;
    match (histogram.max_hard, histogram.min_easy) {
        (Some(max_hard), Some(min_easy)) => Ok((max_hard + min_easy) / 2.0),
        _ => Err(Error::InvalidInput(
            "calibration needs at least one hard and one easy instance".to_string(),
        )),
    }
}
