//! Instance model: items with capacities, bids with demands, allocations,
//! and the bid conflict graph with its weighted-independent-set reduction.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Absolute slack allowed when comparing accumulated item load to capacity.
pub const CAPACITY_TOLERANCE: f64 = 1e-9;

/// An auctioned item with a shared capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: u64,
    pub capacity: f64,
}

/// A bid: a value for a set of items, consuming `demand` units of each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bid {
    pub id: u64,
    pub value: f64,
    pub items: Vec<u64>,
    pub demand: f64,
}

/// A winner-determination instance.
///
/// `seed` records the RNG seed the instance was generated from; feature
/// extraction reuses it so sampled statistics are reproducible per instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdpInstance {
    pub name: String,
    pub seed: u64,
    pub items: Vec<Item>,
    pub bids: Vec<Bid>,
}

/// One reason an instance fails validation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoItems,
    NoBids,
    DuplicateItemId { item: u64 },
    NonPositiveCapacity { item: u64, capacity: f64 },
    DuplicateBidId { bid: u64 },
    NonPositiveValue { bid: u64, value: f64 },
    NonPositiveDemand { bid: u64, demand: f64 },
    EmptyItemSet { bid: u64 },
    DuplicateItemRef { bid: u64, item: u64 },
    UnknownItemRef { bid: u64, item: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoItems => write!(f, "instance has no items"),
            Violation::NoBids => write!(f, "instance has no bids"),
            Violation::DuplicateItemId { item } => write!(f, "duplicate item id {item}"),
            Violation::NonPositiveCapacity { item, capacity } => {
                write!(f, "item {item} capacity {capacity} must be positive and finite")
            }
            Violation::DuplicateBidId { bid } => write!(f, "duplicate bid id {bid}"),
            Violation::NonPositiveValue { bid, value } => {
                write!(f, "bid {bid} value {value} must be positive and finite")
            }
            Violation::NonPositiveDemand { bid, demand } => {
                write!(f, "bid {bid} demand {demand} must be positive and finite")
            }
            Violation::EmptyItemSet { bid } => write!(f, "bid {bid} requests no items"),
            Violation::DuplicateItemRef { bid, item } => {
                write!(f, "bid {bid} references item {item} more than once")
            }
            Violation::UnknownItemRef { bid, item } => {
                write!(f, "bid {bid} references unknown item {item}")
            }
        }
    }
}

/// Index-resolved copy of an instance: item ids replaced by dense indices,
/// per-bid item lists sorted. Built once, shared by solvers and features.
#[derive(Debug, Clone)]
pub struct ResolvedView {
    pub item_ids: Vec<u64>,
    pub capacities: Vec<f64>,
    pub bid_ids: Vec<u64>,
    pub values: Vec<f64>,
    pub demands: Vec<f64>,
    /// Item indices per bid, sorted ascending.
    pub bid_items: Vec<Vec<usize>>,
}

impl ResolvedView {
    pub fn num_items(&self) -> usize {
        self.capacities.len()
    }

    pub fn num_bids(&self) -> usize {
        self.values.len()
    }

    /// Welfare of an accepted set, summed in bid-list order so that equal
    /// accepted sets always produce bit-identical totals.
    pub fn welfare_of(&self, accepted: &[bool]) -> f64 {
        let mut total = 0.0;
        for (i, &a) in accepted.iter().enumerate() {
            if a {
                total += self.values[i];
            }
        }
        total
    }

    /// Evaluates an accepted vector into an [`Allocation`].
    pub fn allocation(&self, accepted: Vec<bool>) -> Allocation {
        let welfare = self.welfare_of(&accepted);
        let mut loads = vec![0.0; self.num_items()];
        for (i, &a) in accepted.iter().enumerate() {
            if a {
                for &e in &self.bid_items[i] {
                    loads[e] += self.demands[i];
                }
            }
        }
        let feasible = loads
            .iter()
            .zip(&self.capacities)
            .all(|(&load, &cap)| load <= cap + CAPACITY_TOLERANCE);
        Allocation { accepted, welfare, feasible }
    }
}

/// A subset of bids with its welfare and feasibility verdict.
///
/// `accepted` is aligned with the instance bid list. `welfare` is the sum of
/// accepted bid values in bid-list order; `feasible` holds iff every item's
/// accumulated demand stays within capacity plus [`CAPACITY_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub accepted: Vec<bool>,
    pub welfare: f64,
    pub feasible: bool,
}

impl Allocation {
    /// Evaluates an accepted vector against an instance.
    pub fn evaluate(instance: &WdpInstance, accepted: Vec<bool>) -> Result<Allocation> {
        let view = instance.resolved()?;
        if accepted.len() != view.num_bids() {
            return Err(Error::InvalidInput(format!(
                "accepted vector has length {}, instance has {} bids",
                accepted.len(),
                view.num_bids()
            )));
        }
        Ok(view.allocation(accepted))
    }

    /// Ids of the accepted bids, in bid-list order.
    pub fn accepted_ids(&self, instance: &WdpInstance) -> Vec<u64> {
        instance
            .bids
            .iter()
            .zip(&self.accepted)
            .filter(|(_, &a)| a)
            .map(|(b, _)| b.id)
            .collect()
    }
}

impl WdpInstance {
    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_bids(&self) -> usize {
        self.bids.len()
    }

    /// Checks every model invariant and returns all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.items.is_empty() {
            out.push(Violation::NoItems);
        }
        if self.bids.is_empty() {
            out.push(Violation::NoBids);
        }
        let mut item_ids = HashSet::new();
        for item in &self.items {
            if !item_ids.insert(item.id) {
                out.push(Violation::DuplicateItemId { item: item.id });
            }
            if !(item.capacity > 0.0) || !item.capacity.is_finite() {
                out.push(Violation::NonPositiveCapacity { item: item.id, capacity: item.capacity });
            }
        }
        let mut bid_ids = HashSet::new();
        for bid in &self.bids {
            if !bid_ids.insert(bid.id) {
                out.push(Violation::DuplicateBidId { bid: bid.id });
            }
            if !(bid.value > 0.0) || !bid.value.is_finite() {
                out.push(Violation::NonPositiveValue { bid: bid.id, value: bid.value });
            }
            if !(bid.demand > 0.0) || !bid.demand.is_finite() {
                out.push(Violation::NonPositiveDemand { bid: bid.id, demand: bid.demand });
            }
            if bid.items.is_empty() {
                out.push(Violation::EmptyItemSet { bid: bid.id });
            }
            let mut seen = HashSet::new();
            for &item in &bid.items {
                if !seen.insert(item) {
                    out.push(Violation::DuplicateItemRef { bid: bid.id, item });
                } else if !item_ids.contains(&item) {
                    out.push(Violation::UnknownItemRef { bid: bid.id, item });
                }
            }
        }
        out
    }

    /// Resolves item ids to dense indices, validating first.
    pub fn resolved(&self) -> Result<ResolvedView> {
        let violations = self.validate();
        if !violations.is_empty() {
            let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::InvalidInstance(msgs.join("; ")));
        }
        let index: HashMap<u64, usize> =
            self.items.iter().enumerate().map(|(i, item)| (item.id, i)).collect();
        let mut bid_items = Vec::with_capacity(self.bids.len());
        for bid in &self.bids {
            let mut resolved: Vec<usize> = bid.items.iter().map(|id| index[id]).collect();
            resolved.sort_unstable();
            bid_items.push(resolved);
        }
        Ok(ResolvedView {
            item_ids: self.items.iter().map(|i| i.id).collect(),
            capacities: self.items.iter().map(|i| i.capacity).collect(),
            bid_ids: self.bids.iter().map(|b| b.id).collect(),
            values: self.bids.iter().map(|b| b.value).collect(),
            demands: self.bids.iter().map(|b| b.demand).collect(),
            bid_items,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<WdpInstance> {
        serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))
    }
}

/// A node-weighted graph for maximum-weight independent set.
///
/// Edges are stored normalized: endpoints ordered, list sorted, no
/// duplicates, no self-loops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MwisInstance {
    pub weights: Vec<f64>,
    pub edges: Vec<(usize, usize)>,
}

impl MwisInstance {
    /// Builds a graph, normalizing edge order and rejecting self-loops,
    /// duplicate edges, out-of-range endpoints, and non-positive weights.
    pub fn new(weights: Vec<f64>, edges: Vec<(usize, usize)>) -> Result<MwisInstance> {
        let n = weights.len();
        if n == 0 {
            return Err(Error::InvalidInput("graph has no nodes".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "node {i} weight {w} must be positive and finite"
                )));
            }
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!("edge ({u}, {v}) out of range for {n} nodes")));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on node {u}")));
            }
            normalized.push((u.min(v), u.max(v)));
        }
        normalized.sort_unstable();
        let before = normalized.len();
        normalized.dedup();
        if normalized.len() != before {
            return Err(Error::InvalidInput("duplicate edge".into()));
        }
        Ok(MwisInstance { weights, edges: normalized })
    }

    pub fn num_nodes(&self) -> usize {
        self.weights.len()
    }
}

/// Builds the bid conflict graph: one node per bid (weight = bid value),
/// an edge between two bids iff their item sets intersect.
pub fn conflict_graph(instance: &WdpInstance) -> Result<MwisInstance> {
    let view = instance.resolved()?;
    let mut bids_on_item: Vec<Vec<usize>> = vec![Vec::new(); view.num_items()];
    for (i, items) in view.bid_items.iter().enumerate() {
        for &e in items {
            bids_on_item[e].push(i);
        }
    }
    let mut edges = HashSet::new();
    for bids in &bids_on_item {
        for (a, &u) in bids.iter().enumerate() {
            for &v in &bids[a + 1..] {
                edges.insert((u.min(v), u.max(v)));
            }
        }
    }
    let mut edges: Vec<(usize, usize)> = edges.into_iter().collect();
    edges.sort_unstable();
    MwisInstance::new(view.values.clone(), edges)
}

/// Embeds a weighted-independent-set instance as a winner-determination
/// instance: one unit bid per node, one unit-capacity item per edge placed in
/// both endpoint bids, and a private item for each isolated node. Optimal
/// welfare is preserved exactly.
pub fn mwis_to_wdp(mwis: &MwisInstance) -> WdpInstance {
    let n = mwis.num_nodes();
    let mut items: Vec<Item> =
        (0..mwis.edges.len()).map(|e| Item { id: e as u64, capacity: 1.0 }).collect();
    let mut bid_items: Vec<Vec<u64>> = vec![Vec::new(); n];
    for (e, &(u, v)) in mwis.edges.iter().enumerate() {
        bid_items[u].push(e as u64);
        bid_items[v].push(e as u64);
    }
    let mut next_item = mwis.edges.len() as u64;
    for refs in bid_items.iter_mut() {
        if refs.is_empty() {
            items.push(Item { id: next_item, capacity: 1.0 });
            refs.push(next_item);
            next_item += 1;
        }
    }
    let bids = mwis
        .weights
        .iter()
        .zip(bid_items)
        .enumerate()
        .map(|(i, (&w, items))| Bid { id: i as u64, value: w, items, demand: 1.0 })
        .collect();
    WdpInstance { name: "mwis_to_wdp".into(), seed: 0, items, bids }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_instance(bid_items: &[&[u64]], values: &[f64]) -> WdpInstance {
        let mut ids = HashSet::new();
        for items in bid_items {
            ids.extend(items.iter().copied());
        }
        let mut ids: Vec<u64> = ids.into_iter().collect();
        ids.sort_unstable();
        WdpInstance {
            name: "unit".into(),
            seed: 0,
            items: ids.iter().map(|&id| Item { id, capacity: 1.0 }).collect(),
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
    fn validate_accepts_well_formed_instance() {
        let inst = unit_instance(&[&[0, 1], &[2]], &[2.0, 1.0]);
        assert!(inst.validate().is_empty());
    }

    #[test]
    fn validate_names_bid_with_zero_demand() {
        let mut inst = unit_instance(&[&[0], &[1]], &[1.0, 1.0]);
        inst.bids[1].demand = 0.0;
        let violations = inst.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0], Violation::NonPositiveDemand { bid: 1, demand: 0.0 });
    }

    #[test]
    fn validate_flags_unknown_item_reference() {
        let mut inst = unit_instance(&[&[0], &[1]], &[1.0, 1.0]);
        inst.bids[0].items.push(99);
        let violations = inst.validate();
        assert_eq!(violations, vec![Violation::UnknownItemRef { bid: 0, item: 99 }]);
    }

    #[test]
    fn validate_flags_nan_value() {
        let mut inst = unit_instance(&[&[0]], &[1.0]);
        inst.bids[0].value = f64::NAN;
        assert_eq!(inst.validate().len(), 1);
    }

    #[test]
    fn allocation_welfare_sums_in_bid_order() {
        let inst = unit_instance(&[&[0], &[1], &[2]], &[0.1, 0.2, 0.3]);
        let alloc = Allocation::evaluate(&inst, vec![true, false, true]).unwrap();
        assert_eq!(alloc.welfare, 0.1 + 0.3);
        assert!(alloc.feasible);
        assert_eq!(alloc.accepted_ids(&inst), vec![0, 2]);
    }

    #[test]
    fn allocation_overload_is_infeasible() {
        let inst = unit_instance(&[&[0], &[0]], &[1.0, 1.0]);
        let alloc = Allocation::evaluate(&inst, vec![true, true]).unwrap();
        assert!(!alloc.feasible);
    }

    #[test]
    fn allocation_tolerates_tiny_capacity_slack() {
        let inst = WdpInstance {
            name: "slack".into(),
            seed: 0,
            items: vec![Item { id: 0, capacity: 3.0 }],
            bids: vec![
                Bid { id: 0, value: 1.0, items: vec![0], demand: 1.5 },
                Bid { id: 1, value: 1.0, items: vec![0], demand: 1.5 + 0.4e-9 },
            ],
        };
        let alloc = Allocation::evaluate(&inst, vec![true, true]).unwrap();
        assert!(alloc.feasible);
    }

    #[test]
    fn evaluate_rejects_wrong_length() {
        let inst = unit_instance(&[&[0]], &[1.0]);
        assert!(Allocation::evaluate(&inst, vec![true, false]).is_err());
    }

    #[test]
    fn conflict_graph_single_bid() {
        let inst = unit_instance(&[&[0, 1]], &[2.5]);
        let g = conflict_graph(&inst).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert!(g.edges.is_empty());
        assert_eq!(g.weights, vec![2.5]);
    }

    #[test]
    fn conflict_graph_star_shape() {
        // Whale shares items with every fish; fish are pairwise disjoint.
        let inst = unit_instance(&[&[0, 1, 2], &[0], &[1], &[2]], &[1.5, 1.0, 1.0, 1.0]);
        let g = conflict_graph(&inst).unwrap();
        assert_eq!(g.edges, vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn mwis_round_trip_preserves_edges() {
        let g = MwisInstance::new(
            vec![1.0, 2.0, 3.0, 4.0],
            vec![(2, 0), (1, 2), (3, 1)],
        )
        .unwrap();
        let back = conflict_graph(&mwis_to_wdp(&g)).unwrap();
        assert_eq!(back.edges, g.edges);
        assert_eq!(back.weights, g.weights);
    }

    #[test]
    fn mwis_isolated_nodes_get_private_items() {
        let g = MwisInstance::new(vec![1.0, 2.0, 3.0], vec![(0, 1)]).unwrap();
        let wdp = mwis_to_wdp(&g);
        assert!(wdp.validate().is_empty());
        // One edge item plus one private item for node 2.
        assert_eq!(wdp.num_items(), 2);
        assert_eq!(wdp.bids[2].items, vec![1]);
    }

    #[test]
    fn mwis_rejects_self_loops_and_duplicates() {
        assert!(MwisInstance::new(vec![1.0, 1.0], vec![(0, 0)]).is_err());
        assert!(MwisInstance::new(vec![1.0, 1.0], vec![(0, 1), (1, 0)]).is_err());
    }

    #[test]
    fn instance_json_round_trip() {
        let inst = unit_instance(&[&[0, 1], &[1]], &[2.0, 1.0]);
        let decoded = WdpInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(decoded, inst);
    }

    #[test]
    fn instance_json_schema_field_names() {
        let inst = unit_instance(&[&[0]], &[1.0]);
        let value: serde_json::Value = serde_json::from_str(&inst.to_json()).unwrap();
        assert!(value["name"].is_string());
        assert!(value["seed"].is_u64());
        assert!(value["items"][0]["capacity"].is_number());
        assert!(value["bids"][0]["demand"].is_number());
        assert!(value["bids"][0]["items"].is_array());
    }
}
