//! Feature-extractor invariance and robustness on generated corpora.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wdp_triage::{
    exact, extract, gen_kstar, gen_mixed, greedy_gap, Bid, Item, MixConfig, Tag, TrapConfig,
    WdpInstance, FEATURE_COUNT,
};

fn small_mix(n_hard: usize, n_easy: usize, seed: u64) -> MixConfig {
    MixConfig { n_hard, n_easy, rng_seed: seed, ..MixConfig::default() }
}

/// Random instances sized so every feature path (Jaccard over all pairs,
/// congestion correlation, per-item utilization) is exercised.
fn random_instance(rng: &mut ChaCha8Rng) -> WdpInstance {
    let m = rng.gen_range(1..=12);
    let n = rng.gen_range(1..=20);
    let items: Vec<Item> =
        (0..m).map(|id| Item { id: id as u64, capacity: rng.gen_range(0.5..4.0) }).collect();
    let bids = (0..n)
        .map(|id| {
            let width = rng.gen_range(1..=m);
            let mut refs: Vec<u64> = (0..m as u64).collect();
            for i in (1..refs.len()).rev() {
                refs.swap(i, rng.gen_range(0..=i));
            }
            refs.truncate(width);
            refs.sort_unstable();
            Bid {
                id: id as u64,
                value: rng.gen_range(0.1..50.0),
                items: refs,
                demand: rng.gen_range(0.1..2.0),
            }
        })
        .collect();
    WdpInstance { name: "fuzz".into(), seed: 0, items, bids }
}

/// Reverses the bid list and relabels item ids through a monotone map,
/// leaving the encoded auction unchanged.
fn relabeled(instance: &WdpInstance) -> WdpInstance {
    let map = |id: u64| id * 3 + 7;
    let items =
        instance.items.iter().map(|i| Item { id: map(i.id), capacity: i.capacity }).collect();
    let mut bids: Vec<Bid> = instance
        .bids
        .iter()
        .map(|b| Bid {
            id: b.id,
            value: b.value,
            items: b.items.iter().map(|&r| map(r)).collect(),
            demand: b.demand,
        })
        .collect();
    bids.reverse();
    WdpInstance { name: instance.name.clone(), seed: instance.seed, items, bids }
}

#[test]
fn features_ignore_bid_order_and_item_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut corpus: Vec<WdpInstance> = (0..40).map(|_| random_instance(&mut rng)).collect();
    corpus.push(gen_kstar(&TrapConfig::kstar(5, 0.5, 10, 3)).unwrap().0);
    for instance in &corpus {
        let base = extract(instance).unwrap();
        let twin = extract(&relabeled(instance)).unwrap();
        for (i, (a, b)) in base.values.iter().zip(&twin.values).enumerate() {
            assert!(
                (a - b).abs() <= 1e-9,
                "feature {i} drifted under relabeling: {a} vs {b} on {}",
                instance.name
            );
        }
    }
}

#[test]
fn features_are_finite_on_degenerate_shapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut corpus: Vec<WdpInstance> = (0..300).map(|_| random_instance(&mut rng)).collect();
    // Hand-built corners: one bid, one item, full-coverage bids, constant values.
    corpus.push(WdpInstance {
        name: "single".into(),
        seed: 0,
        items: vec![Item { id: 0, capacity: 1.0 }],
        bids: vec![Bid { id: 0, value: 1.0, items: vec![0], demand: 1.0 }],
    });
    corpus.push(WdpInstance {
        name: "uniform".into(),
        seed: 0,
        items: (0..4).map(|id| Item { id, capacity: 2.0 }).collect(),
        bids: (0..6)
            .map(|id| Bid { id, value: 3.0, items: vec![0, 1, 2, 3], demand: 1.0 })
            .collect(),
    });
    for (k, eps) in [(2, 0.0), (10, 0.5)] {
        corpus.push(gen_kstar(&TrapConfig::kstar(k, eps, 2 * k, 9)).unwrap().0);
    }
    for instance in &corpus {
        let fv = extract(instance).unwrap();
        assert_eq!(fv.values.len(), FEATURE_COUNT);
        for (i, v) in fv.values.iter().enumerate() {
            assert!(v.is_finite(), "feature {i} not finite on {}: {v}", instance.name);
        }
    }
}

#[test]
fn mixed_corpus_separates_hard_from_easy_gaps() {
    let batch = gen_mixed(&small_mix(30, 30, 77)).unwrap();
    let mut hard = Vec::new();
    let mut easy = Vec::new();
    for tagged in &batch {
        let gap = match &tagged.certificate {
            Some(cert) => (cert.optimal_welfare - cert.greedy_welfare) / cert.optimal_welfare,
            None => {
                let reference = exact(&tagged.instance, Duration::from_secs(30)).unwrap();
                greedy_gap(&tagged.instance, &reference).unwrap().greedy_gap
            }
        };
        match tagged.tag {
            Tag::Hard => hard.push(gap),
            Tag::Easy => easy.push(gap),
        }
    }
    assert_eq!(hard.len(), 30);
    assert_eq!(easy.len(), 30);
    // Capacities absorb all contention on easy instances, so greedy is exact
    // on every one of them, not just on average.
    assert!(easy.iter().all(|&g| g == 0.0), "easy gaps not identically zero: {easy:?}");
    let median = |xs: &mut Vec<f64>| {
        xs.sort_by(f64::total_cmp);
        xs[xs.len() / 2]
    };
    let med_hard = median(&mut hard);
    let med_easy = median(&mut easy);
    assert!(med_hard > 0.3, "hard median gap too small: {med_hard}");
    assert!(med_hard > 3.0 * med_easy, "separation collapsed: {med_hard} vs {med_easy}");
}

#[test]
fn gap_is_bit_stable_under_power_of_two_value_scaling() {
    let batch = gen_mixed(&small_mix(6, 6, 5)).unwrap();
    for tagged in &batch {
        let mut scaled = tagged.instance.clone();
        for bid in &mut scaled.bids {
            bid.value *= 4.0;
        }
        let limit = Duration::from_secs(30);
        let base_gap = greedy_gap(&tagged.instance, &exact(&tagged.instance, limit).unwrap()).unwrap();
        let scaled_gap = greedy_gap(&scaled, &exact(&scaled, limit).unwrap()).unwrap();
        assert_eq!(base_gap.greedy_gap, scaled_gap.greedy_gap);
        assert_eq!(scaled_gap.optimal_welfare, 4.0 * base_gap.optimal_welfare);
    }
}
