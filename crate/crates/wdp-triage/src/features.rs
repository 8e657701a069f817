//! Structural features of an instance, used as regressor inputs and routing
//! signals. All statistics are population moments; degenerate cases (constant
//! data, zero variance) map to 0 rather than NaN so every vector is finite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

use crate::model::{ResolvedView, WdpInstance};
use crate::Result;

pub const FEATURE_COUNT: usize = 20;

/// Pair budget for the mean-Jaccard feature; beyond this many bid pairs the
/// mean is taken over a seeded sample instead of all pairs.
pub const JACCARD_PAIR_BUDGET: usize = 200;

/// Canonical feature order; CSV headers and ablation groups index into this.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "cv_bid_density",
    "mean_bid_density",
    "max_bid_density",
    "std_bid_density",
    "bottleneck_tightness",
    "value_congestion_corr",
    "bid_value_mean",
    "bid_value_std",
    "bid_value_skew",
    "bid_value_kurtosis",
    "bid_cap_mean",
    "bid_cap_std",
    "edge_util_mean",
    "edge_util_std",
    "edge_util_max",
    "conflict_density",
    "graph_density",
    "bid_overlap_jaccard",
    "value_cap_ratio_mean",
    "value_cap_ratio_std",
];

/// One instance's features, in [`FEATURE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy)]
struct Moments {
    mean: f64,
    std: f64,
    skew: f64,
    kurtosis: f64,
}

/// Population moments with an explicit constant-data guard: identical inputs
/// yield std = skew = kurtosis = 0 exactly, no matter how the mean rounds.
fn moments(xs: &[f64]) -> Moments {
    if xs.is_empty() {
        return Moments { mean: 0.0, std: 0.0, skew: 0.0, kurtosis: 0.0 };
    }
    let first = xs[0];
    if xs.iter().all(|&x| x == first) {
        return Moments { mean: first, std: 0.0, skew: 0.0, kurtosis: 0.0 };
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in xs {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    if m2 <= 0.0 {
        return Moments { mean, std: 0.0, skew: 0.0, kurtosis: 0.0 };
    }
    Moments {
        mean,
        std: m2.sqrt(),
        skew: m3 / m2.powf(1.5),
        kurtosis: m4 / (m2 * m2) - 3.0,
    }
}

/// Coefficient of variation; 0 for empty, constant, or zero-mean data.
fn coefficient_of_variation(xs: &[f64]) -> f64 {
    let m = moments(xs);
    if m.mean == 0.0 {
        0.0
    } else {
        m.std / m.mean
    }
}

/// Pearson correlation; 0 when either side has no variance.
fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let constant = |zs: &[f64]| zs.iter().all(|&z| z == zs[0]);
    if constant(xs) || constant(ys) {
        return 0.0;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    if vx <= 0.0 || vy <= 0.0 {
        return 0.0;
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// Size of the intersection of two sorted index slices.
fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

fn jaccard(a: &[usize], b: &[usize]) -> f64 {
    let inter = intersection_size(a, b) as f64;
    let union = (a.len() + b.len()) as f64 - inter;
    if union == 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Mean pairwise Jaccard overlap of bid item sets. All pairs when there are
/// at most [`JACCARD_PAIR_BUDGET`]; otherwise that many distinct pairs drawn
/// without replacement from an RNG seeded with the instance seed.
fn mean_pairwise_jaccard(view: &ResolvedView, seed: u64) -> f64 {
    let n = view.num_bids();
    if n < 2 {
        return 0.0;
    }
    let total_pairs = n * (n - 1) / 2;
    if total_pairs <= JACCARD_PAIR_BUDGET {
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                sum += jaccard(&view.bid_items[i], &view.bid_items[j]);
            }
        }
        return sum / total_pairs as f64;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(JACCARD_PAIR_BUDGET);
    let mut sum = 0.0;
    while seen.len() < JACCARD_PAIR_BUDGET {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a == b {
            continue;
        }
        let pair = (a.min(b), a.max(b));
        if seen.insert(pair) {
            sum += jaccard(&view.bid_items[pair.0], &view.bid_items[pair.1]);
        }
    }
    sum / JACCARD_PAIR_BUDGET as f64
}

fn density_cv(view: &ResolvedView) -> f64 {
    let mut counts = vec![0usize; view.num_items()];
    for items in &view.bid_items {
        for &e in items {
            counts[e] += 1;
        }
    }
    let used: Vec<f64> = counts.iter().filter(|&&c| c > 0).map(|&c| c as f64).collect();
    coefficient_of_variation(&used)
}

/// Coefficient of variation of per-item bid counts over the items that carry
/// at least one bid. Uniform trap structure drives this toward 0; scattered
/// random demand pushes it up. The routing selector thresholds on it.
pub fn bid_density_cv(instance: &WdpInstance) -> Result<f64> {
    Ok(density_cv(&instance.resolved()?))
}

/// Computes the 20 structural features in [`FEATURE_NAMES`] order.
pub fn extract(instance: &WdpInstance) -> Result<FeatureVector> {
    let view = instance.resolved()?;
    let n = view.num_bids();
    let m = view.num_items();

    let mut counts = vec![0usize; m];
    let mut loads = vec![0.0; m];
    for (i, items) in view.bid_items.iter().enumerate() {
        for &e in items {
            counts[e] += 1;
            loads[e] += view.demands[i];
        }
    }
    let used: Vec<usize> = (0..m).filter(|&e| counts[e] > 0).collect();
    let counts_all: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    let counts_used: Vec<f64> = used.iter().map(|&e| counts[e] as f64).collect();
    let util: Vec<f64> = (0..m).map(|e| loads[e] / view.capacities[e]).collect();
    let util_used: Vec<f64> = used.iter().map(|&e| util[e]).collect();

    let density_all = moments(&counts_all);
    let max_density = counts.iter().copied().max().unwrap_or(0) as f64;

    // Mean utilization of the top quarter (rounded up) of loaded items,
    // ordered by utilization then item id.
    let q = ((0.25 * used.len() as f64).ceil() as usize).max(1).min(used.len());
    let bottleneck = {
        let mut ranked = used.clone();
        let by_congestion = |a: &usize, b: &usize| {
            util[*b]
                .partial_cmp(&util[*a])
                .expect("utilizations are finite")
                .then(view.item_ids[*a].cmp(&view.item_ids[*b]))
        };
        if q < ranked.len() {
            ranked.select_nth_unstable_by(q - 1, by_congestion);
        }
        ranked[..q].iter().map(|&e| util[e]).sum::<f64>() / q as f64
    };

    let per_bid_congestion: Vec<f64> = view
        .bid_items
        .iter()
        .map(|items| items.iter().map(|&e| util[e]).sum::<f64>() / items.len() as f64)
        .collect();

    let value_stats = moments(&view.values);
    let demand_stats = moments(&view.demands);
    let util_stats = moments(&util_used);
    let util_max = util_used.iter().cloned().fold(0.0, f64::max);
    let mean_set_size =
        view.bid_items.iter().map(|items| items.len() as f64).sum::<f64>() / n as f64;
    let ratios: Vec<f64> = (0..n).map(|i| view.values[i] / view.demands[i]).collect();
    let ratio_stats = moments(&ratios);

    let values = [
        density_cv(&view),
        density_all.mean,
        max_density,
        density_all.std,
        bottleneck,
        pearson(&view.values, &per_bid_congestion),
        value_stats.mean,
        value_stats.std,
        value_stats.skew,
        value_stats.kurtosis,
        demand_stats.mean,
        demand_stats.std,
        util_stats.mean,
        util_stats.std,
        util_max,
        moments(&counts_used).mean,
        n as f64 * mean_set_size / m as f64,
        mean_pairwise_jaccard(&view, instance.seed),
        ratio_stats.mean,
        ratio_stats.std,
    ];
    debug_assert!(values.iter().all(|v| v.is_finite()));
    Ok(FeatureVector { values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_kstar, TrapConfig};
    use crate::model::{Bid, Item};

    fn unit_instance(bid_items: &[&[u64]], values: &[f64], n_items: u64) -> WdpInstance {
        WdpInstance {
            name: "feat".into(),
            seed: 7,
            items: (0..n_items).map(|id| Item { id, capacity: 1.0 }).collect(),
            bids: bid_items
                .iter()
                .zip(values)
                .enumerate()
                .map(|(i, (items, &value))| Bid {
                    id: i as u64,
                    value,
                    items: items.to_vec(),
                    demand: 1.0,
                })
                .collect(),
        }
    }

    #[test]
    fn kstar_density_is_uniform() {
        // Every item carries the whale plus exactly one fish.
        let (inst, _) = gen_kstar(&TrapConfig::kstar(4, 0.25, 8, 0)).unwrap();
        let f = extract(&inst).unwrap();
        assert_eq!(f.values[0], 0.0);
        assert_eq!(f.values[1], 2.0);
        assert_eq!(f.values[2], 2.0);
        assert_eq!(f.values[3], 0.0);
    }

    #[test]
    fn density_cv_of_one_and_three_is_half() {
        // Item 0 appears in one bid, item 1 in three: mean 2, std 1.
        let inst =
            unit_instance(&[&[0, 1], &[1], &[1]], &[1.0, 2.0, 3.0], 2);
        assert_eq!(bid_density_cv(&inst).unwrap(), 0.5);
    }

    #[test]
    fn density_cv_matches_extract_column() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(41);
        for round in 0..100 {
            let m = rng.gen_range(2..=9);
            let n = rng.gen_range(1..=12);
            let bids: Vec<Vec<u64>> = (0..n)
                .map(|_| {
                    let size = rng.gen_range(1..=m);
                    let mut refs = rand::seq::index::sample(&mut rng, m, size).into_vec();
                    refs.sort_unstable();
                    refs.iter().map(|&r| r as u64).collect()
                })
                .collect();
            let refs: Vec<&[u64]> = bids.iter().map(|b| b.as_slice()).collect();
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
            let mut inst = unit_instance(&refs, &values, m as u64);
            inst.seed = round;
            assert_eq!(bid_density_cv(&inst).unwrap(), extract(&inst).unwrap().values[0]);
        }
    }

    #[test]
    fn identical_values_zero_out_dispersion_stats() {
        let inst = unit_instance(&[&[0], &[1], &[2]], &[0.1, 0.1, 0.1], 3);
        let f = extract(&inst).unwrap();
        assert_eq!(f.values[7], 0.0);
        assert_eq!(f.values[8], 0.0);
        assert_eq!(f.values[9], 0.0);
        // Constant values also kill the value-congestion correlation.
        assert_eq!(f.values[5], 0.0);
    }

    #[test]
    fn graph_density_uses_raw_item_count() {
        // 3 bids averaging 2 items each over 4 items: 3 * 2 / 4 = 1.5.
        let inst = unit_instance(&[&[0, 1], &[1, 2], &[2, 3]], &[1.0, 2.0, 3.0], 4);
        let f = extract(&inst).unwrap();
        assert_eq!(f.values[16], 1.5);
    }

    #[test]
    fn jaccard_all_pairs_small_instance() {
        // Pairs: (01): 1/3, (02): 0, (12): 0 -> mean 1/9.
        let inst = unit_instance(&[&[0, 1], &[1, 2], &[3]], &[1.0, 2.0, 3.0], 4);
        let f = extract(&inst).unwrap();
        assert!((f.values[17] - (1.0 / 3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn jaccard_sampling_is_deterministic_per_seed() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        // 25 bids -> 300 pairs, above the budget, so the sampler kicks in.
        let bids: Vec<Vec<u64>> = (0..25)
            .map(|_| {
                let size = rng.gen_range(1..=4);
                let mut refs = rand::seq::index::sample(&mut rng, 12, size).into_vec();
                refs.sort_unstable();
                refs.iter().map(|&r| r as u64).collect()
            })
            .collect();
        let refs: Vec<&[u64]> = bids.iter().map(|b| b.as_slice()).collect();
        let values: Vec<f64> = (0..25).map(|i| 1.0 + i as f64).collect();
        let inst = unit_instance(&refs, &values, 12);
        let a = extract(&inst).unwrap();
        let b = extract(&inst).unwrap();
        assert_eq!(a.values[17], b.values[17]);
        let mut reseeded = inst.clone();
        reseeded.seed = 8;
        let c = extract(&reseeded).unwrap();
        assert_ne!(a.values[17], c.values[17]);
    }

    #[test]
    fn extraction_rejects_invalid_instances() {
        let inst = WdpInstance {
            name: "empty".into(),
            seed: 0,
            items: vec![Item { id: 0, capacity: 1.0 }],
            bids: vec![],
        };
        assert!(extract(&inst).is_err());
    }

    #[test]
    fn unused_items_lower_all_item_stats_but_not_used_stats() {
        let crowded = unit_instance(&[&[0], &[0]], &[1.0, 2.0], 1);
        let sparse = unit_instance(&[&[0], &[0]], &[1.0, 2.0], 5);
        let fc = extract(&crowded).unwrap();
        let fs = extract(&sparse).unwrap();
        // Mean over all items drops with dead items; mean over used items and
        // the used-only density CV do not.
        assert!(fs.values[1] < fc.values[1]);
        assert_eq!(fs.values[15], fc.values[15]);
        assert_eq!(fs.values[0], fc.values[0]);
        assert_eq!(fs.values[12], fc.values[12]);
    }

    #[test]
    fn bottleneck_takes_top_quarter_rounded_up() {
        // Utilizations: item0 = 3, item1 = 1, item2 = 1, item3 = 1 (unit
        // caps). ceil(4 * 0.25) = 1 item -> mean of the single hottest = 3.
        let inst = unit_instance(
            &[&[0, 1], &[0, 2], &[0, 3]],
            &[1.0, 2.0, 3.0],
            4,
        );
        let f = extract(&inst).unwrap();
        assert_eq!(f.values[4], 3.0);
        assert_eq!(f.values[14], 3.0);
    }

    #[test]
    fn value_congestion_correlation_sign() {
        // Higher-value bids hit the crowded item; lower value sits alone.
        let positive = unit_instance(&[&[0], &[0], &[1]], &[5.0, 4.0, 0.5], 2);
        let f = extract(&positive).unwrap();
        assert!(f.values[5] > 0.5);
    }
}
