//! Three solvers for the same maximization problem, in ascending cost:
//! value-greedy, branch-and-bound with a residual-feasibility bound, and a
//! subset-enumeration oracle for small instances.

use std::time::{Duration, Instant};

use crate::model::{Allocation, ResolvedView, WdpInstance, CAPACITY_TOLERANCE};
use crate::{Error, Result};

/// Hard cap on instance size for [`brute_force`]; 2^25 subsets is the most
/// the oracle will enumerate.
pub const BRUTE_FORCE_MAX_BIDS: usize = 25;

/// Output of a solver run.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub allocation: Allocation,
    pub solver_name: &'static str,
    /// Wall-clock seconds spent solving.
    pub wall_time: f64,
    /// Search nodes visited; only branch-and-bound reports this.
    pub node_count: Option<u64>,
    /// True iff the welfare is proven maximal.
    pub proven_optimal: bool,
}

/// Relative greedy shortfall against a proven optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    /// (optimal - greedy) / optimal, clamped to [0, 1]; 0 when they agree.
    pub greedy_gap: f64,
    pub optimal_welfare: f64,
    pub heuristic_welfare: f64,
}

fn fits(view: &ResolvedView, loads: &[f64], bid: usize) -> bool {
    view.bid_items[bid]
        .iter()
        .all(|&e| loads[e] + view.demands[bid] <= view.capacities[e] + CAPACITY_TOLERANCE)
}

fn add_bid(view: &ResolvedView, loads: &mut [f64], bid: usize) {
    for &e in &view.bid_items[bid] {
        loads[e] += view.demands[bid];
    }
}

fn remove_bid(view: &ResolvedView, loads: &mut [f64], bid: usize) {
    for &e in &view.bid_items[bid] {
        loads[e] -= view.demands[bid];
    }
}

/// Greedy by value: scan bids in order of strictly decreasing value (ties by
/// ascending bid id) and accept each bid whose demand still fits every item
/// it touches. Runs in O(n log n) plus one feasibility pass per bid.
pub fn greedy(instance: &WdpInstance) -> Result<SolveResult> {
    let view = instance.resolved()?;
    let start = Instant::now();
    let n = view.num_bids();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        view.values[b]
            .partial_cmp(&view.values[a])
            .expect("bid values are finite")
            .then(view.bid_ids[a].cmp(&view.bid_ids[b]))
    });
    let mut loads = vec![0.0; view.num_items()];
    let mut accepted = vec![false; n];
    for &i in &order {
        if fits(&view, &loads, i) {
            accepted[i] = true;
            add_bid(&view, &mut loads, i);
        }
    }
    Ok(SolveResult {
        allocation: view.allocation(accepted),
        solver_name: "greedy",
        wall_time: start.elapsed().as_secs_f64(),
        node_count: None,
        proven_optimal: false,
    })
}

struct Search<'a> {
    view: &'a ResolvedView,
    /// Bid indices in branching order: decreasing value/demand, ties by id.
    order: Vec<usize>,
    loads: Vec<f64>,
    chosen: Vec<bool>,
    /// Running welfare along the current branch; used for bounding only.
    running: f64,
    best_chosen: Vec<bool>,
    best_welfare: f64,
    nodes: u64,
    start: Instant,
    limit: Duration,
    timed_out: bool,
}

impl Search<'_> {
    fn dfs(&mut self, depth: usize) {
        self.nodes += 1;
        if self.nodes % 1024 == 1 && self.start.elapsed() >= self.limit {
            self.timed_out = true;
        }
        if self.timed_out {
            return;
        }
        let n = self.order.len();
        if depth == n {
            let welfare = self.view.welfare_of(&self.chosen);
            if welfare > self.best_welfare {
                self.best_welfare = welfare;
                self.best_chosen = self.chosen.clone();
            }
            return;
        }
        // Upper bound: everything individually feasible against the residual
        // capacities could still be taken.
        let mut bound = self.running;
        for d in depth..n {
            let i = self.order[d];
            if fits(self.view, &self.loads, i) {
                bound += self.view.values[i];
            }
        }
        if bound <= self.best_welfare {
            return;
        }
        let i = self.order[depth];
        if fits(self.view, &self.loads, i) {
            self.chosen[i] = true;
            add_bid(self.view, &mut self.loads, i);
            self.running += self.view.values[i];
            self.dfs(depth + 1);
            self.running -= self.view.values[i];
            remove_bid(self.view, &mut self.loads, i);
            self.chosen[i] = false;
            if self.timed_out {
                return;
            }
        }
        self.dfs(depth + 1);
    }
}

/// Exact branch-and-bound. Branches on bids in decreasing value-per-demand
/// order; prunes when the running welfare plus the total value of remaining
/// individually-feasible bids cannot beat the incumbent. If the time limit
/// expires the incumbent is returned with `proven_optimal == false`.
pub fn exact(instance: &WdpInstance, time_limit: Duration) -> Result<SolveResult> {
    if time_limit.is_zero() {
        return Err(Error::InvalidConfig("time limit must be positive".into()));
    }
    let view = instance.resolved()?;
    let start = Instant::now();
    let n = view.num_bids();
    let mut order: Vec<usize> = (0..n).collect();
    let ratio: Vec<f64> = (0..n).map(|i| view.values[i] / view.demands[i]).collect();
    order.sort_by(|&a, &b| {
        ratio[b]
            .partial_cmp(&ratio[a])
            .expect("bid ratios are finite")
            .then(view.bid_ids[a].cmp(&view.bid_ids[b]))
    });
    let mut search = Search {
        view: &view,
        order,
        loads: vec![0.0; view.num_items()],
        chosen: vec![false; n],
        running: 0.0,
        best_chosen: vec![false; n],
        best_welfare: 0.0,
        nodes: 0,
        start,
        limit: time_limit,
        timed_out: false,
    };
    search.dfs(0);
    let proven = !search.timed_out;
    let allocation = view.allocation(search.best_chosen);
    Ok(SolveResult {
        allocation,
        solver_name: "exact",
        wall_time: start.elapsed().as_secs_f64(),
        node_count: Some(search.nodes),
        proven_optimal: proven,
    })
}

/// Enumerates all 2^n bid subsets and returns a maximum-welfare feasible
/// allocation. Refuses instances with more than [`BRUTE_FORCE_MAX_BIDS`] bids.
pub fn brute_force(instance: &WdpInstance) -> Result<SolveResult> {
    let view = instance.resolved()?;
    let n = view.num_bids();
    if n > BRUTE_FORCE_MAX_BIDS {
        return Err(Error::TooManyBids { got: n, max: BRUTE_FORCE_MAX_BIDS });
    }
    let start = Instant::now();
    let mut loads = vec![0.0; view.num_items()];
    let mut touched: Vec<usize> = Vec::new();
    let mut best_mask = 0u64;
    let mut best_welfare = 0.0;
    for mask in 0u64..(1u64 << n) {
        let mut feasible = true;
        let mut welfare = 0.0;
        'bids: for i in 0..n {
            if mask & (1 << i) == 0 {
                continue;
            }
            for &e in &view.bid_items[i] {
                if loads[e] == 0.0 {
                    touched.push(e);
                }
                loads[e] += view.demands[i];
                if loads[e] > view.capacities[e] + CAPACITY_TOLERANCE {
                    feasible = false;
                    break 'bids;
                }
            }
            welfare += view.values[i];
        }
        for &e in &touched {
            loads[e] = 0.0;
        }
        touched.clear();
        if feasible && welfare > best_welfare {
            best_welfare = welfare;
            best_mask = mask;
        }
    }
    let accepted: Vec<bool> = (0..n).map(|i| best_mask & (1 << i) != 0).collect();
    Ok(SolveResult {
        allocation: view.allocation(accepted),
        solver_name: "brute_force",
        wall_time: start.elapsed().as_secs_f64(),
        node_count: None,
        proven_optimal: true,
    })
}

/// Runs greedy on the instance and reports its relative shortfall against a
/// proven-optimal reference solve.
pub fn greedy_gap(instance: &WdpInstance, reference: &SolveResult) -> Result<GapReport> {
    if !reference.proven_optimal {
        return Err(Error::NotProvenOptimal);
    }
    let heuristic = greedy(instance)?.allocation.welfare;
    let optimal = reference.allocation.welfare;
    let gap = welfare_gap(optimal, heuristic);
    Ok(GapReport { greedy_gap: gap, optimal_welfare: optimal, heuristic_welfare: heuristic })
}

/// Optimality gap (optimal - achieved) / optimal, clamped to [0, 1]. Exactly
/// 0 when the welfares agree bitwise or the optimum is non-positive.
pub fn welfare_gap(optimal: f64, achieved: f64) -> f64 {
    if achieved == optimal || optimal <= 0.0 {
        0.0
    } else {
        ((optimal - achieved) / optimal).clamp(0.0, 1.0)
    }
}
