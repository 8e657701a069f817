//! Triage toolkit for the combinatorial-auction winner determination problem.
//!
//! The crate covers the full loop from instance construction to solver
//! dispatch: adversarial generators with analytic welfare certificates
//! ([`generators`]), a greedy heuristic plus exact branch-and-bound and a
//! brute-force oracle ([`solvers`]), a 20-dimensional structural feature
//! extractor ([`features`]), a small from-scratch MLP that regresses the
//! greedy welfare gap ([`hardness`]), and an instance router that picks the
//! cheap or expensive solver per instance ([`router`]).

// Validation guards are written `!(x > 0.0)` so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt;

pub mod features;
pub mod generators;
pub mod hardness;
pub mod model;
pub mod router;
pub mod solvers;

pub use features::{bid_density_cv, extract, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
pub use generators::{
    gen_kstar, gen_mixed, gen_star_trap_mis, gen_trap, Certificate, InstanceLabel, MixConfig, Tag,
    TaggedInstance, TrapConfig,
};
pub use hardness::{
    evaluate, evaluate_predictions, feature_groups, logo_ablation, permutation_importance,
    threshold_sweep, train, EvalReport, FeatureGroup, HardnessModel, LogoReport, LogoRow,
    TrainConfig, TrainReport, MIN_TRAIN_SET,
};
pub use model::{
    conflict_graph, mwis_to_wdp, Allocation, Bid, Item, MwisInstance, WdpInstance,
    CAPACITY_TOLERANCE,
};
pub use router::{
    calibrate_cv_threshold, cv_histogram, evaluate_hybrid, hybrid_solve, select, CvHistogram,
    HybridReport, LabeledInstance, Route, RouteRow, SelectorConfig, SelectorMode,
};
pub use solvers::{
    brute_force, exact, greedy, greedy_gap, welfare_gap, GapReport, SolveResult,
    BRUTE_FORCE_MAX_BIDS,
};

/// Errors shared by every module in the crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The instance violates the model contract (see `WdpInstance::validate`).
    InvalidInstance(String),
    /// A generator, solver, or training configuration is out of range.
    InvalidConfig(String),
    /// An argument outside the configuration structs is malformed.
    InvalidInput(String),
    /// Training data has too few rows to fit the regressor.
    DatasetTooSmall { got: usize, min: usize },
    /// Training labels collapse to a single value; nothing to regress.
    DegenerateLabels,
    /// The brute-force solver refuses instances this large.
    TooManyBids { got: usize, max: usize },
    /// The model has not been trained; predictions would be noise.
    UntrainedModel,
    /// The learned selector was asked to route without a model.
    MissingModel,
    /// An evaluation routine received an empty dataset.
    EmptyDataset,
    /// A gap computation needs a reference solve with proven optimality.
    NotProvenOptimal,
    /// JSON (de)serialization failed.
    Json(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInstance(msg) => write!(f, "invalid instance: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DatasetTooSmall { got, min } => {
                write!(f, "dataset too small: {got} labeled instances, need at least {min}")
            }
            Error::DegenerateLabels => write!(f, "labels are degenerate: need at least 2 distinct gap values"),
            Error::TooManyBids { got, max } => {
                write!(f, "instance has {got} bids; brute force is capped at {max}")
            }
            Error::UntrainedModel => write!(f, "model is untrained"),
            Error::MissingModel => write!(f, "learned routing requires a trained model"),
            Error::EmptyDataset => write!(f, "dataset is empty"),
            Error::NotProvenOptimal => {
                write!(f, "reference solve is not proven optimal; gap would be meaningless")
            }
            Error::Json(msg) => write!(f, "json error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
