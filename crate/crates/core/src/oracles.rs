//! Exhaustive solvers and independent attacker oracles for small instances.
//!
//! * [`solve_exact_enum`] enumerates every facility set and solves the
//!   attacker for each one.
//! * [`attacker_oracle_subsets`] tests candidate un-covered sets in
//!   decreasing weight with an LP feasibility check.
//! * [`attacker_oracle_star`] solves the attacker on a star as a 0/1
//!   knapsack.
//! * [`star_from_knapsack`] builds the star instance for a knapsack.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use crate::attacker::{facility_reach, solve_attacker, AttackerResult};
use crate::error::{Error, Result};
use crate::graph::{coverage, uncovered_after, Downgrade, Edge, FacilitySet, Network, Node, NodeId};
use crate::instance::Instance;
use crate::mclp::binomial;
use crate::solver::{self, Cmp, Model, Sense, SolveParams, SolverError, Status};

/// Largest number of facility sets [`solve_exact_enum`] will enumerate.
pub const EXACT_ENUM_GUARD: u128 = 100_000;
/// Largest `|C(X)|` accepted by [`attacker_oracle_subsets`].
pub const SUBSET_ORACLE_GUARD: usize = 16;
/// Largest knapsack capacity, in scaled cost units, for the star oracle.
pub const KNAPSACK_CAPACITY_GUARD: u64 = 10_000_000;
/// Costs `c_e (R - l_e)` are products of two 2-dp numbers, so they are
/// integral at this scale.
const COST_SCALE: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AttackerMode {
    #[default]
    Milp,
    Oracle,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExactSolution {
    pub facilities: FacilitySet,
    pub gamma: Downgrade,
    /// Demand still covered after the attack.
    pub value: u64,
    /// Value of every facility set, in lexicographic order.
    pub table: Vec<(FacilitySet, u64)>,
}

/// Exhaustive leader enumeration. Ties keep the lexicographically smallest
/// facility set.
pub fn solve_exact_enum(inst: &Instance, mode: AttackerMode) -> Result<ExactSolution> {
    let n = inst.n();
    let count = binomial(n, inst.p);
    if count > EXACT_ENUM_GUARD {
        return Err(Error::GuardExceeded(format!(
            "C({n},{}) = {count} facility sets exceeds {EXACT_ENUM_GUARD}",
            inst.p
        )));
    }
    let sets: Vec<Vec<NodeId>> = (0..n).combinations(inst.p).collect();
    let results: Vec<(FacilitySet, u64, Downgrade)> = sets
        .into_par_iter()
        .map(|s| {
            let x = FacilitySet::new(s, n)?;
            let before = coverage(&inst.network, &inst.zero_downgrade(), &x, inst.radius)?.demand;
            let res = match mode {
                AttackerMode::Milp => solve_attacker(inst, &x, None)?,
                AttackerMode::Oracle => attacker_oracle_subsets(inst, &x)?,
            };
            Ok((x, before - res.objective, res.gamma))
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (k, r) in results.iter().enumerate() {
        if r.1 > results[best].1 {
            best = k;
        }
    }
    let (facilities, value, gamma) = results[best].clone();
    Ok(ExactSolution {
        facilities,
        gamma,
        value,
        table: results.into_iter().map(|(x, v, _)| (x, v)).collect(),
    })
}

/// Subsets of `items` (indices into `weights`, sorted by ascending weight)
/// ordered by nondecreasing total weight, as bitmasks over positions.
struct AscendingSubsets<'a> {
    weights: &'a [u64],
    heap: BinaryHeap<Reverse<(u64, usize, u32)>>,
    started: bool,
}

impl<'a> AscendingSubsets<'a> {
    fn new(weights: &'a [u64]) -> Self {
        debug_assert!(weights.windows(2).all(|w| w[0] <= w[1]));
        AscendingSubsets {
            weights,
            heap: BinaryHeap::new(),
            started: false,
        }
    }
}

impl Iterator for AscendingSubsets<'_> {
    type Item = (u64, u32);

    fn next(&mut self) -> Option<(u64, u32)> {
        if !self.started {
            self.started = true;
            if !self.weights.is_empty() {
                self.heap.push(Reverse((self.weights[0], 0, 1)));
            }
            return Some((0, 0));
        }
        let Reverse((sum, last, mask)) = self.heap.pop()?;
        let next = last + 1;
        if next < self.weights.len() {
            let w = self.weights[next];
            self.heap.push(Reverse((sum + w, next, mask | (1 << next))));
            self.heap.push(Reverse((
                sum - self.weights[last] + w,
                next,
                (mask & !(1 << last)) | (1 << next),
            )));
        }
        Some((sum, mask))
    }
}

/// Can a feasible downgrade push every node in `targets` to distance
/// `>= R`? Returns the cheapest such downgrade and the potentials.
fn push_away(inst: &Instance, x: &FacilitySet, targets: &[NodeId]) -> Result<Option<(Vec<f64>, Vec<f64>)>> {
    let net = &inst.network;
    let mut model = Model::new("push_away", Sense::Minimize);
    let gamma: Vec<_> = net
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| model.add_continuous(format!("gamma_{e}"), 0.0, edge.upper))
        .collect();
    let pi: Vec<_> = (0..inst.n())
        .map(|k| {
            let hi = if x.contains(k) { 0.0 } else { f64::INFINITY };
            model.add_continuous(format!("pi_{k}"), 0.0, hi)
        })
        .collect();
    let cost: Vec<_> = gamma
        .iter()
        .enumerate()
        .map(|(e, &v)| (v, net.edge(e).cost_rate))
        .collect();
    if !cost.is_empty() {
        model.add_constraint("budget", cost.clone(), Cmp::Le, inst.budget);
    }
    for (e, edge) in net.edges().iter().enumerate() {
        for (k, l) in [(edge.a, edge.b), (edge.b, edge.a)] {
            model.add_constraint(
                format!("arc_{k}_{l}"),
                vec![(pi[k], 1.0), (pi[l], -1.0), (gamma[e], -1.0)],
                Cmp::Le,
                edge.length,
            );
        }
    }
    for &i in targets {
        model.set_bounds(pi[i], inst.radius, f64::INFINITY);
    }
    model.set_objective(cost);
    let out = solver::solve(&model, &SolveParams::default())?;
    match out.status {
        Status::Infeasible => Ok(None),
        Status::Optimal => {
            let p = out.primal.expect("optimal outcome has a point");
            let g = gamma.iter().map(|v| p[v.index()]).collect();
            let pot = pi.iter().map(|v| p[v.index()]).collect();
            Ok(Some((g, pot)))
        }
        s => Err(Error::Solver(SolverError::Backend(format!(
            "feasibility LP ended with status {s}"
        )))),
    }
}

/// Attacker optimum by testing un-covered sets in decreasing weight.
///
/// A set `S` can be un-covered iff some downgrade admits potentials that
/// are zero on `X`, satisfy every arc inequality and reach `R` on `S`: the
/// true distances are such a potential, and any potential is a lower bound
/// on distances.
pub fn attacker_oracle_subsets(inst: &Instance, x: &FacilitySet) -> Result<AttackerResult> {
    if x.len() != inst.p {
        return Err(Error::invalid(format!(
            "facility set has {} nodes, instance has p = {}",
            x.len(),
            inst.p
        )));
    }
    let reach = facility_reach(inst, x);
    let covered: Vec<NodeId> = (0..inst.n()).filter(|&i| reach.iter().any(|r| r[i])).collect();
    if covered.len() > SUBSET_ORACLE_GUARD {
        return Err(Error::GuardExceeded(format!(
            "|C(X)| = {} exceeds the subset oracle limit {SUBSET_ORACLE_GUARD}",
            covered.len()
        )));
    }
    let mut cand: Vec<NodeId> = covered.iter().copied().filter(|&i| !x.contains(i)).collect();
    cand.sort_by_key(|&i| (inst.network.weight(i), i));
    let weights: Vec<u64> = cand.iter().map(|&i| inst.network.weight(i)).collect();

    // Excluded sets in ascending weight are kept sets in descending weight.
    for (_, excluded) in AscendingSubsets::new(&weights) {
        let mut s: Vec<NodeId> = cand
            .iter()
            .enumerate()
            .filter(|&(k, _)| excluded & (1 << k) == 0)
            .map(|(_, &i)| i)
            .collect();
        s.sort_unstable();
        if let Some((g, pot)) = push_away(inst, x, &s)? {
            let gamma = Downgrade::new(&inst.network, g)?;
            let q = inst.network.demand(&s);
            let evaluated = uncovered_after(&inst.network, x, &gamma, inst.radius)?;
            if s.iter().any(|&i| !evaluated.contains(i)) {
                return Err(Error::Solver(SolverError::Backend(
                    "feasibility LP downgrade leaves a target covered".into(),
                )));
            }
            return Ok(AttackerResult {
                facilities: x.clone(),
                gamma,
                uncovered: s,
                objective: q,
                status: Status::Optimal,
                best_bound: q as f64,
                potentials: pot.into_iter().enumerate().collect(),
            });
        }
    }
    // The empty set is always feasible, so the loop returns.
    unreachable!("gamma = 0 un-covers the empty set")
}

/// Center of a star network: the endpoint shared by every edge.
fn star_center(net: &Network) -> Option<NodeId> {
    let first = net.edges().first()?;
    [first.a, first.b]
        .into_iter()
        .find(|&c| net.edges().iter().all(|e| e.a == c || e.b == c))
}

/// 0/1 knapsack over integer costs; returns the best value and the chosen
/// item indices. Ties prefer leaving later items out.
pub fn knapsack(costs: &[u64], values: &[u64], capacity: u64) -> Result<(u64, Vec<usize>)> {
    if capacity > KNAPSACK_CAPACITY_GUARD {
        return Err(Error::GuardExceeded(format!(
            "knapsack capacity {capacity} exceeds {KNAPSACK_CAPACITY_GUARD}"
        )));
    }
    let cap = capacity as usize;
    let mut best = vec![0u64; cap + 1];
    let mut take = vec![vec![false; cap + 1]; costs.len()];
    for (k, (&c, &v)) in costs.iter().zip(values).enumerate() {
        let c = c as usize;
        for r in (c..=cap).rev() {
            let cand = best[r - c] + v;
            if cand > best[r] {
                best[r] = cand;
                take[k][r] = true;
            }
        }
    }
    let mut chosen = Vec::new();
    let mut r = cap;
    for k in (0..costs.len()).rev() {
        if take[k][r] {
            chosen.push(k);
            r -= costs[k] as usize;
        }
    }
    chosen.reverse();
    Ok((best[cap], chosen))
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Attacker optimum on a star with the facility at the center.
///
/// Satellite `i` is un-covered iff `gamma_i >= R - l_i`, which needs
/// `u_i >= R - l_i` and costs `c_i (R - l_i)`.
pub fn attacker_oracle_star(inst: &Instance, x: &FacilitySet) -> Result<AttackerResult> {
    let net = &inst.network;
    let center = star_center(net).ok_or_else(|| Error::invalid("network is not a star"))?;
    if x.as_slice() != [center] {
        return Err(Error::invalid(format!("facility set {x} is not the star center {center}")));
    }
    let r = inst.radius;
    let mut items = Vec::new();
    for (e, edge) in net.edges().iter().enumerate() {
        let gap = r - edge.length;
        let covered = crate::graph::within_radius(edge.length, r, crate::graph::DEFAULT_EPS_COV);
        if covered && edge.upper >= gap - 1e-9 {
            let cost = (edge.cost_rate * gap * COST_SCALE).round() as u64;
            items.push((e, edge.other(center), gap, cost));
        }
    }
    let total: u64 = items.iter().map(|t| t.3).sum();
    let mut capacity = ((inst.budget * COST_SCALE) + 1e-6).floor() as u64;
    capacity = capacity.min(total);
    let g = items.iter().fold(0, |acc, t| gcd(acc, t.3)).max(1);
    let costs: Vec<u64> = items.iter().map(|t| t.3 / g).collect();
    let values: Vec<u64> = items.iter().map(|t| net.weight(t.1)).collect();
    let (q, chosen) = knapsack(&costs, &values, capacity / g)?;

    let mut gamma = vec![0.0; inst.m()];
    let mut uncovered = Vec::new();
    for &k in &chosen {
        let (e, node, gap, _) = items[k];
        gamma[e] = gap.min(net.edge(e).upper);
        uncovered.push(node);
    }
    uncovered.sort_unstable();
    Ok(AttackerResult {
        facilities: x.clone(),
        gamma: Downgrade::new(net, gamma)?,
        uncovered,
        objective: q,
        status: Status::Optimal,
        best_bound: q as f64,
        potentials: Vec::new(),
    })
}

/// The star instance whose attacker problem is the given knapsack:
/// center `0` with weight `W`, satellite `i + 1` with weight `b_i` on an
/// edge of length `R - g_i`, `u = max g`, `R = u + 1`, `c = 1`, `B = K`,
/// `p = 1`.
pub fn star_from_knapsack(g: &[u64], b: &[u64], capacity: u64, center_weight: u64) -> Result<Instance> {
    if g.is_empty() || g.len() != b.len() {
        return Err(Error::invalid("need equally many item weights and values, at least one"));
    }
    if g.iter().chain(b).any(|&v| v == 0) {
        return Err(Error::invalid("item weights and values must be positive"));
    }
    if let Some(&big) = g.iter().find(|&&v| v > capacity) {
        return Err(Error::invalid(format!("item weight {big} exceeds capacity {capacity}")));
    }
    let sum_b: u64 = b.iter().sum();
    if center_weight <= sum_b {
        return Err(Error::invalid(format!(
            "center weight {center_weight} must exceed total value {sum_b}"
        )));
    }
    let u = *g.iter().max().expect("non-empty") as f64;
    let r = u + 1.0;
    let mut nodes = vec![Node::new(center_weight)];
    nodes.extend(b.iter().map(|&w| Node::new(w)));
    let edges = g
        .iter()
        .enumerate()
        .map(|(k, &gi)| Edge::new(0, k + 1, r - gi as f64, 1.0, u))
        .collect();
    Instance::new(Network::new(nodes, edges)?, 1, r, capacity as f64)
}
