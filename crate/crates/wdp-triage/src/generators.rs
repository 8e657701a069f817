//! Instance generators. The trap families plant a single high-value "whale"
//! bid across a block of items so that value-greedy takes it and forfeits the
//! disjoint "fish" bids covering the same block; each trap instance carries
//! an analytic certificate of both welfares. The mixed generator batches
//! trap-built hard instances with conflict-light easy instances for training
//! and routing datasets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Bid, Item, MwisInstance, WdpInstance};
use crate::{Error, Result};

/// Dataset label: was the instance built to defeat greedy or not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Hard,
    Easy,
}

/// Analytic welfare certificate for a trap instance: what greedy scores,
/// what the optimum scores, and their ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub greedy_welfare: f64,
    pub optimal_welfare: f64,
    pub analytic_ratio: f64,
}

/// Sidecar label written next to each generated instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceLabel {
    pub greedy_gap: f64,
    pub tag: Tag,
    pub certificate: Option<Certificate>,
}

/// A generated instance with its dataset tag and, when the construction is
/// pure trap structure, an analytic certificate.
#[derive(Debug, Clone)]
pub struct TaggedInstance {
    pub instance: WdpInstance,
    pub tag: Tag,
    pub certificate: Option<Certificate>,
}

/// Parameters for the single-trap generators.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapConfig {
    /// Number of fish bids; the greedy/optimal ratio shrinks as 1/k.
    pub k: usize,
    /// Whale value. Must exceed every fish but lose to all fish together.
    pub v_w: f64,
    /// Fish value.
    pub v_f: f64,
    /// Whale premium used by the k-star family: v_w = 1 + epsilon.
    pub epsilon: f64,
    /// Items in the trap block, split round-robin among the fish.
    pub m_trap: usize,
    /// Recorded on the instance for downstream sampled statistics.
    pub rng_seed: u64,
}

impl TrapConfig {
    /// Canonical k-star parameterization: unit fish, whale at 1 + epsilon.
    pub fn kstar(k: usize, epsilon: f64, m_trap: usize, rng_seed: u64) -> TrapConfig {
        TrapConfig { k, v_w: 1.0 + epsilon, v_f: 1.0, epsilon, m_trap, rng_seed }
    }
}

/// Emits the whale bid followed by `k` fish bids over `m_trap` unit items.
/// Fish `f` takes the block items whose local index is congruent to `f`
/// modulo `k`, so the fish partition the block near-evenly.
fn build_star(
    name: String,
    k: usize,
    m_trap: usize,
    v_w: f64,
    v_f: f64,
    seed: u64,
) -> (WdpInstance, Certificate) {
    let items: Vec<Item> = (0..m_trap).map(|id| Item { id: id as u64, capacity: 1.0 }).collect();
    let mut bids = Vec::with_capacity(k + 1);
    bids.push(Bid { id: 0, value: v_w, items: (0..m_trap as u64).collect(), demand: 1.0 });
    for f in 0..k {
        let block: Vec<u64> = (0..m_trap as u64).filter(|j| (*j as usize) % k == f).collect();
        bids.push(Bid { id: (f + 1) as u64, value: v_f, items: block, demand: 1.0 });
    }
    // Greedy accepts the whale first and the whale blocks every fish; the
    // optimum takes all k fish. Welfares are folded in bid order, matching
    // how the solvers total an accepted set.
    let greedy_welfare = v_w;
    let mut optimal_welfare = 0.0;
    for _ in 0..k {
        optimal_welfare += v_f;
    }
    let certificate = Certificate {
        greedy_welfare,
        optimal_welfare,
        analytic_ratio: greedy_welfare / optimal_welfare,
    };
    (WdpInstance { name, seed, items, bids }, certificate)
}

/// k-star trap: a whale at value 1 + epsilon spanning all items versus k
/// disjoint unit-value fish covering them. Greedy keeps the whale (at
/// epsilon = 0 the whale still wins the value tie because it has the lowest
/// bid id), so the greedy/optimal ratio is exactly (1 + epsilon) / k.
pub fn gen_kstar(config: &TrapConfig) -> Result<(WdpInstance, Certificate)> {
    if config.k < 2 {
        return Err(Error::InvalidConfig(format!("k = {} must be at least 2", config.k)));
    }
    if !config.epsilon.is_finite() || config.epsilon < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "epsilon = {} must be finite and non-negative",
            config.epsilon
        )));
    }
    if config.m_trap < config.k {
        return Err(Error::InvalidConfig(format!(
            "m_trap = {} cannot split among k = {} fish",
            config.m_trap, config.k
        )));
    }
    let v_w = 1.0 + config.epsilon;
    if v_w >= config.k as f64 {
        return Err(Error::InvalidConfig(format!(
            "whale value {v_w} must stay below k = {}, or the fish no longer beat it",
            config.k
        )));
    }
    let name = format!("kstar_k{}_eps{}", config.k, config.epsilon);
    Ok(build_star(name, config.k, config.m_trap, v_w, 1.0, config.rng_seed))
}

/// General trap with explicit whale and fish values. Requires the strict
/// chain k * v_f > v_w > v_f so greedy provably scores v_w while the optimum
/// scores k * v_f.
pub fn gen_trap(config: &TrapConfig) -> Result<(WdpInstance, Certificate)> {
    if config.k < 2 {
        return Err(Error::InvalidConfig(format!("k = {} must be at least 2", config.k)));
    }
    for (label, v) in [("v_w", config.v_w), ("v_f", config.v_f)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::InvalidConfig(format!("{label} = {v} must be positive and finite")));
        }
    }
    if config.m_trap < config.k {
        return Err(Error::InvalidConfig(format!(
            "m_trap = {} cannot split among k = {} fish",
            config.m_trap, config.k
        )));
    }
    if !(config.v_w > config.v_f) {
        return Err(Error::InvalidConfig(format!(
            "whale value {} must exceed fish value {}",
            config.v_w, config.v_f
        )));
    }
    if !(config.k as f64 * config.v_f > config.v_w) {
        return Err(Error::InvalidConfig(format!(
            "k * v_f = {} must exceed whale value {}",
            config.k as f64 * config.v_f,
            config.v_w
        )));
    }
    let name = format!("trap_k{}_vw{}_vf{}", config.k, config.v_w, config.v_f);
    Ok(build_star(name, config.k, config.m_trap, config.v_w, config.v_f, config.rng_seed))
}

/// Parameters for the mixed hard/easy dataset generator.
#[derive(Debug, Clone, PartialEq)]
pub struct MixConfig {
    pub n_hard: usize,
    pub n_easy: usize,
    /// Traps embedded per hard instance, each on its own item block with its
    /// own fish count drawn uniformly from 2..=6.
    pub n_traps: usize,
    /// Low-value noise bids added to each hard instance.
    pub filler_count: usize,
    /// Uniform value range for filler and easy bids.
    pub filler_value_range: (f64, f64),
    /// Item pool per hard instance; trap blocks and the filler pool (sized at
    /// twice `filler_count`) are carved from the front.
    pub total_items: usize,
    pub easy_bids: usize,
    pub easy_items: usize,
    /// Inclusive range of items requested per easy bid.
    pub easy_bid_size_range: (usize, usize),
    /// Whale value for embedded traps; fish values are drawn per trap so the
    /// fish jointly beat the whale.
    pub whale_value: f64,
    pub rng_seed: u64,
}

impl Default for MixConfig {
    fn default() -> MixConfig {
        MixConfig {
            n_hard: 50,
            n_easy: 50,
            n_traps: 3,
            filler_count: 10,
            filler_value_range: (2.0, 20.0),
            total_items: 60,
            easy_bids: 40,
            easy_items: 60,
            easy_bid_size_range: (1, 4),
            whale_value: 100.0,
            rng_seed: 0,
        }
    }
}

const MIXED_TRAP_K_MAX: usize = 6;

impl MixConfig {
    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.filler_value_range;
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "filler value range ({lo}, {hi}) needs a positive lower bound and ordered ends"
            )));
        }
        if !(self.whale_value > 0.0) || !self.whale_value.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "whale value {} must be positive and finite",
                self.whale_value
            )));
        }
        if self.n_hard > 0 && self.n_traps == 0 && self.filler_count == 0 {
            return Err(Error::InvalidConfig(
                "hard instances need at least one trap or filler bid".into(),
            ));
        }
        // Worst case: every trap draws the largest fish count.
        let trap_items = self.n_traps * 2 * MIXED_TRAP_K_MAX;
        let needed = trap_items + 2 * self.filler_count;
        if self.n_hard > 0 && needed > self.total_items {
            return Err(Error::InvalidConfig(format!(
                "item pool too small: {} traps plus {} filler items may need {needed} items, pool has {}",
                self.n_traps, 2 * self.filler_count, self.total_items
            )));
        }
        let (slo, shi) = self.easy_bid_size_range;
        if self.n_easy > 0 {
            if self.easy_bids == 0 {
                return Err(Error::InvalidConfig("easy instances need at least one bid".into()));
            }
            if slo < 1 || shi < slo || shi > self.easy_items {
                return Err(Error::InvalidConfig(format!(
                    "easy bid size range ({slo}, {shi}) must fit within {} items",
                    self.easy_items
                )));
            }
        }
        Ok(())
    }
}

fn gen_hard_instance(config: &MixConfig, index: usize, seed: u64) -> TaggedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bids: Vec<Bid> = Vec::new();
    let mut next_item = 0u64;
    let mut next_bid = 0u64;
    let mut whale_values: Vec<f64> = Vec::new();
    let mut fish_values: Vec<f64> = Vec::new();
    for _ in 0..config.n_traps {
        let k = rng.gen_range(2..=MIXED_TRAP_K_MAX);
        // Fish value in (v_w / k, v_w) with margin at both ends keeps the
        // trap chain strict and spreads the greedy shortfall.
        let ratio = rng.gen_range(1.1 / k as f64..0.9);
        let v_f = config.whale_value * ratio;
        let block: Vec<u64> = (next_item..next_item + 2 * k as u64).collect();
        next_item += 2 * k as u64;
        bids.push(Bid {
            id: next_bid,
            value: config.whale_value,
            items: block.clone(),
            demand: 1.0,
        });
        next_bid += 1;
        whale_values.push(config.whale_value);
        for f in 0..k {
            let fish_items: Vec<u64> =
                block.iter().copied().filter(|j| (*j - block[0]) as usize % k == f).collect();
            bids.push(Bid { id: next_bid, value: v_f, items: fish_items, demand: 1.0 });
            next_bid += 1;
            fish_values.push(v_f);
        }
    }
    let pool_start = next_item;
    let pool_len = 2 * config.filler_count;
    for _ in 0..config.filler_count {
        let size = rng.gen_range(1..=2.min(pool_len.max(1)));
        let mut refs = rand::seq::index::sample(&mut rng, pool_len, size).into_vec();
        refs.sort_unstable();
        let value = rng.gen_range(config.filler_value_range.0..config.filler_value_range.1);
        bids.push(Bid {
            id: next_bid,
            value,
            items: refs.iter().map(|&r| pool_start + r as u64).collect(),
            demand: 1.0,
        });
        next_bid += 1;
    }
    // With no filler noise the welfare split is pure trap structure, so both
    // welfares are known in closed form.
    let certificate = if config.filler_count == 0 && config.n_traps > 0 {
        let greedy_welfare = whale_values.iter().sum();
        let optimal_welfare = fish_values.iter().sum::<f64>();
        Some(Certificate {
            greedy_welfare,
            optimal_welfare,
            analytic_ratio: greedy_welfare / optimal_welfare,
        })
    } else {
        None
    };
    // Only items some bid touches exist; slack items would dilute the
    // per-item contention statistics that make trap instances recognizable.
    let items: Vec<Item> =
        (0..next_item + pool_len as u64).map(|id| Item { id, capacity: 1.0 }).collect();
    let instance = WdpInstance {
        name: format!("mixed_hard_{index:04}"),
        seed,
        items,
        bids,
    };
    TaggedInstance { instance, tag: Tag::Hard, certificate }
}

/// Easy instances are uncongested by construction: bids request random item
/// bundles, but every item's capacity is sized to the contention it actually
/// received, so all bids fit simultaneously. Accepting everything is optimal
/// and greedy does exactly that, making the true greedy gap 0. The per-item
/// bid counts still scatter, which is what separates these instances from the
/// uniformly-contended traps in density statistics.
fn gen_easy_instance(config: &MixConfig, index: usize, seed: u64) -> TaggedInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (slo, shi) = config.easy_bid_size_range;
    let mut counts = vec![0u32; config.easy_items];
    let bids: Vec<Bid> = (0..config.easy_bids)
        .map(|id| {
            let size = rng.gen_range(slo..=shi);
            let mut refs = rand::seq::index::sample(&mut rng, config.easy_items, size).into_vec();
            refs.sort_unstable();
            for &r in &refs {
                counts[r] += 1;
            }
            let value = rng.gen_range(config.filler_value_range.0..config.filler_value_range.1);
            Bid {
                id: id as u64,
                value,
                items: refs.iter().map(|&r| r as u64).collect(),
                demand: 1.0,
            }
        })
        .collect();
    let items: Vec<Item> = (0..config.easy_items)
        .map(|id| Item { id: id as u64, capacity: f64::from(counts[id].max(1)) })
        .collect();
    let instance = WdpInstance {
        name: format!("mixed_easy_{index:04}"),
        seed,
        items,
        bids,
    };
    TaggedInstance { instance, tag: Tag::Easy, certificate: None }
}

/// Generates `n_hard` trap-built instances followed by `n_easy` conflict-light
/// instances. Each instance gets its own seed drawn from the master seed, so
/// the whole dataset is a pure function of the config.
pub fn gen_mixed(config: &MixConfig) -> Result<Vec<TaggedInstance>> {
    config.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut out = Vec::with_capacity(config.n_hard + config.n_easy);
    for i in 0..config.n_hard {
        let seed = master.gen::<u64>();
        out.push(gen_hard_instance(config, i, seed));
    }
    for i in 0..config.n_easy {
        let seed = master.gen::<u64>();
        out.push(gen_easy_instance(config, i, seed));
    }
    Ok(out)
}

/// Star graph for the independent-set view of the trap: node 0 is the hub at
/// `weight_center`, nodes 1..=k are leaves at `weight_leaf`. The construction
/// is deterministic; `_seed` is accepted for signature symmetry with the
/// other generators.
pub fn gen_star_trap_mis(
    k: usize,
    weight_center: f64,
    weight_leaf: f64,
    _seed: u64,
) -> Result<MwisInstance> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("k = {k} must be at least 2")));
    }
    for (label, w) in [("weight_center", weight_center), ("weight_leaf", weight_leaf)] {
        if !(w > 0.0) || !w.is_finite() {
            return Err(Error::InvalidConfig(format!("{label} = {w} must be positive and finite")));
        }
    }
    let mut weights = vec![weight_center];
    weights.extend(std::iter::repeat_n(weight_leaf, k));
    let edges = (1..=k).map(|leaf| (0, leaf)).collect();
    MwisInstance::new(weights, edges)
}
