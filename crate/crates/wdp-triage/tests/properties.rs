//! Randomized structural properties of the instance model and solvers.

use std::time::Duration;

use proptest::prelude::*;
use wdp_triage::{
    brute_force, conflict_graph, exact, greedy, mwis_to_wdp, Allocation, Bid, Item, MwisInstance,
    WdpInstance,
};

/// Instances with integer-derived floats: small enough for the brute-force
/// oracle, varied enough to exercise ties and infeasibility.
fn small_instance() -> impl Strategy<Value = WdpInstance> {
    let item = (1u32..=4).prop_map(|c| c as f64 / 2.0);
    let items = prop::collection::vec(item, 1..=6);
    items.prop_flat_map(|capacities| {
        let m = capacities.len();
        let bid = (
            1u32..=1000,
            prop::collection::btree_set(0..m, 1..=m.min(3)),
            1u32..=3,
        );
        prop::collection::vec(bid, 1..=9).prop_map(move |raw| WdpInstance {
            name: "prop".into(),
            seed: 0,
            items: capacities
                .iter()
                .enumerate()
                .map(|(id, &capacity)| Item { id: id as u64, capacity })
                .collect(),
            bids: raw
                .into_iter()
                .enumerate()
                .map(|(id, (value, item_refs, demand))| Bid {
                    id: id as u64,
                    value: value as f64 / 10.0,
                    items: item_refs.into_iter().map(|e| e as u64).collect(),
                    demand: demand as f64 / 2.0,
                })
                .collect(),
        })
    })
}

fn mwis_graph() -> impl Strategy<Value = MwisInstance> {
    (1usize..=9).prop_flat_map(|n| {
        let weights = prop::collection::vec((1u32..=100).prop_map(|w| w as f64 / 4.0), n);
        let all_pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let edges = prop::collection::btree_set(0..all_pairs.len().max(1), 0..=all_pairs.len());
        (weights, edges).prop_map(move |(weights, picks)| {
            let edges: Vec<(usize, usize)> =
                picks.into_iter().filter_map(|i| all_pairs.get(i).copied()).collect();
            MwisInstance::new(weights, edges).expect("construction is valid by design")
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn greedy_allocations_are_feasible_and_consistent(instance in small_instance()) {
        let result = greedy(&instance).unwrap();
        prop_assert!(result.allocation.feasible);
        // Re-evaluating the accepted vector reproduces the reported welfare.
        let again = Allocation::evaluate(&instance, result.allocation.accepted.clone()).unwrap();
        prop_assert_eq!(again.welfare, result.allocation.welfare);
        prop_assert!(again.feasible);
    }

    #[test]
    fn exact_dominates_greedy_and_matches_brute_force(instance in small_instance()) {
        let greedy_result = greedy(&instance).unwrap();
        let exact_result = exact(&instance, Duration::from_secs(30)).unwrap();
        prop_assert!(exact_result.proven_optimal);
        prop_assert!(exact_result.allocation.welfare >= greedy_result.allocation.welfare);
        let brute = brute_force(&instance).unwrap();
        prop_assert_eq!(exact_result.allocation.welfare, brute.allocation.welfare);
    }

    #[test]
    fn instance_json_round_trip_is_bit_exact(instance in small_instance()) {
        let text = instance.to_json();
        let back = WdpInstance::from_json(&text).unwrap();
        prop_assert_eq!(&back, &instance);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn conflict_graph_inverts_mwis_embedding(graph in mwis_graph()) {
        let wdp = mwis_to_wdp(&graph);
        prop_assert!(wdp.validate().is_empty());
        // One bid per node, in node order, carrying the node weight.
        prop_assert_eq!(wdp.bids.len(), graph.num_nodes());
        let recovered = conflict_graph(&wdp).unwrap();
        prop_assert_eq!(recovered.weights, graph.weights);
        prop_assert_eq!(recovered.edges, graph.edges);
    }
}
