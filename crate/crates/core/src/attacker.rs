//! The attacker's problem for a fixed facility set.
//!
//! Given `X`, the attacker picks `gamma` within budget to maximize the demand
//! of `C(X)` pushed to distance `>= R`. Distances enter through node
//! potentials `pi`: facilities have `pi = 0`, every arc satisfies
//! `pi_k <= pi_l + l_e + gamma_e`, and `R eta_i <= pi_i` marks node `i` as
//! un-covered. Any such potential is a lower bound on the true distance to
//! `X`, and the true distance itself is feasible, so the model is exact.
//!
//! Two builders are provided:
//!
//! * [`build_attacker_model_reduced`]: one potential per covered node and
//!   only the arcs whose endpoints can both be covered by the same open
//!   facility. Arcs outside every `A[V^m]` cannot lie on a path shorter than
//!   `R` to a facility, so dropping them does not change the optimum.
//! * [`build_attacker_model_full`]: a separate potential vector for every
//!   covered node `i` over all arcs, with `pi^i_k <= M_k (1 - x_k)`. Only
//!   used to cross-check the reduced model.

use std::time::Duration;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{
    dijkstra, uncovered_after, within_radius, Downgrade, EdgeId, FacilitySet, Network, NodeId,
    DEFAULT_EPS_COV,
};
use crate::instance::Instance;
use crate::solver::{self, Cmp, MilpBackend, Model, Sense, SolveParams, SolverError, Status, VarId};

/// Objective values within this distance of an integer are rounded to it.
const INTEGRALITY_TOL: f64 = 1e-4;
/// Slack allowed on the budget row of a returned downgrade.
const BUDGET_TOL: f64 = 1e-6;

/// `M_k`: the `(n - p + 1)`-th smallest distance from `k` in `N(u)`,
/// counting `d_u(k, k) = 0`. Any facility set of size `p` has a member
/// among the `n - p + 1` nodes closest to `k`, so this bounds the potential
/// of `k` for every downgrade.
pub fn big_m(net: &Network, p: usize) -> Result<Vec<f64>> {
    let n = net.node_count();
    if p == 0 || p > n {
        return Err(Error::invalid(format!("p = {p} must lie in 1..={n}")));
    }
    let full: Vec<f64> = net.edges().iter().map(|e| e.upper).collect();
    Ok((0..n)
        .map(|k| {
            let mut d = dijkstra(net, &full, &[k]);
            d.sort_by(f64::total_cmp);
            d[n - p]
        })
        .collect())
}

/// A potential variable: `block` is `Some(i)` for the per-node copies of
/// the full model and `None` in the reduced model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialVar {
    pub block: Option<NodeId>,
    pub node: NodeId,
    pub var: VarId,
}

#[derive(Debug, Clone)]
pub struct AttackerModel {
    pub model: Model,
    /// `C(X)`, sorted.
    pub covered: Vec<NodeId>,
    pub eta: Vec<(NodeId, VarId)>,
    pub gamma: Vec<(EdgeId, VarId)>,
    pub potentials: Vec<PotentialVar>,
    /// Edges whose arcs appear in the model.
    pub arc_edges: Vec<EdgeId>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackerResult {
    pub facilities: FacilitySet,
    pub gamma: Downgrade,
    /// Nodes with `eta = 1`, sorted.
    pub uncovered: Vec<NodeId>,
    /// `Q`: demand un-covered by `gamma`.
    pub objective: u64,
    #[serde(serialize_with = "status_str")]
    pub status: Status,
    pub best_bound: f64,
    /// Potential values `(node, pi)` as returned by the solver. For the full
    /// model every per-node copy is listed.
    pub potentials: Vec<(NodeId, f64)>,
}

fn status_str<S: serde::Serializer>(s: &Status, ser: S) -> std::result::Result<S::Ok, S::Error> {
    ser.serialize_str(&s.to_string())
}

impl AttackerResult {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

fn check_facilities(inst: &Instance, x: &FacilitySet) -> Result<()> {
    if x.len() != inst.p {
        return Err(Error::invalid(format!(
            "facility set has {} nodes, instance has p = {}",
            x.len(),
            inst.p
        )));
    }
    if let Some(bad) = x.iter().find(|&v| v >= inst.n()) {
        return Err(Error::invalid(format!("facility {bad} outside 0..{}", inst.n())));
    }
    Ok(())
}

/// `V^m = { i : d(i, m) < R }` for every `m` in `X`, in the order of `X`.
pub fn facility_reach(inst: &Instance, x: &FacilitySet) -> Vec<Vec<bool>> {
    let zero = vec![0.0; inst.m()];
    x.iter()
        .map(|m| {
            dijkstra(&inst.network, &zero, &[m])
                .into_iter()
                .map(|d| within_radius(d, inst.radius, DEFAULT_EPS_COV))
                .collect()
        })
        .collect()
}

fn covered_from_reach(n: usize, reach: &[Vec<bool>]) -> Vec<NodeId> {
    (0..n).filter(|&i| reach.iter().any(|r| r[i])).collect()
}

/// Reduced single-index model with the arc restriction.
pub fn build_attacker_model_reduced(inst: &Instance, x: &FacilitySet) -> Result<AttackerModel> {
    check_facilities(inst, x)?;
    let net = &inst.network;
    let n = inst.n();
    let m_k = big_m(net, inst.p)?;
    let reach = facility_reach(inst, x);
    let covered = covered_from_reach(n, &reach);

    let arc_edges: Vec<EdgeId> = net
        .edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| reach.iter().any(|r| r[e.a] && r[e.b]))
        .map(|(id, _)| id)
        .collect();

    let mut model = Model::new("attacker_reduced", Sense::Maximize);
    let eta: Vec<(NodeId, VarId)> = covered
        .iter()
        .map(|&i| {
            let v = model.add_binary(format!("eta_{i}"));
            if x.contains(i) {
                model.set_bounds(v, 0.0, 0.0);
            }
            (i, v)
        })
        .collect();
    let gamma: Vec<(EdgeId, VarId)> = arc_edges
        .iter()
        .map(|&e| (e, model.add_continuous(format!("gamma_{e}"), 0.0, net.edge(e).upper)))
        .collect();
    let mut pi_of = vec![None; n];
    let potentials: Vec<PotentialVar> = covered
        .iter()
        .map(|&k| {
            let hi = if x.contains(k) { 0.0 } else { m_k[k] };
            let var = model.add_continuous(format!("pi_{k}"), 0.0, hi);
            pi_of[k] = Some(var);
            PotentialVar {
                block: None,
                node: k,
                var,
            }
        })
        .collect();

    if !gamma.is_empty() {
        model.add_constraint(
            "budget",
            gamma.iter().map(|&(e, v)| (v, net.edge(e).cost_rate)).collect(),
            Cmp::Le,
            inst.budget,
        );
    }
    for &(i, v) in &eta {
        let pi = pi_of[i].expect("covered node has a potential");
        model.add_constraint(format!("link_{i}"), vec![(v, inst.radius), (pi, -1.0)], Cmp::Le, 0.0);
    }
    for (&e, &(_, g)) in arc_edges.iter().zip(&gamma) {
        let edge = net.edge(e);
        let (pa, pb) = (pi_of[edge.a].unwrap(), pi_of[edge.b].unwrap());
        for (k, l, pk, pl) in [(edge.a, edge.b, pa, pb), (edge.b, edge.a, pb, pa)] {
            model.add_constraint(
                format!("arc_{k}_{l}"),
                vec![(pk, 1.0), (pl, -1.0), (g, -1.0)],
                Cmp::Le,
                edge.length,
            );
        }
    }
    model.set_objective(eta.iter().map(|&(i, v)| (v, net.weight(i) as f64)).collect());

    Ok(AttackerModel {
        model,
        covered,
        eta,
        gamma,
        potentials,
        arc_edges,
    })
}

/// Super-indexed model: one potential vector per covered node `i` over all
/// arcs of the network, with facility potentials bounded by
/// `M_k (1 - x_k)`. Blocks for nodes outside `C(X)` are omitted since their
/// `eta` is fixed to zero.
pub fn build_attacker_model_full(inst: &Instance, x: &FacilitySet) -> Result<AttackerModel> {
    check_facilities(inst, x)?;
    let net = &inst.network;
    let n = inst.n();
    let m_k = big_m(net, inst.p)?;
    let reach = facility_reach(inst, x);
    let covered = covered_from_reach(n, &reach);
    let rho: Vec<bool> = (0..n).map(|i| covered.binary_search(&i).is_ok()).collect();

    let mut model = Model::new("attacker_full", Sense::Maximize);
    let eta: Vec<(NodeId, VarId)> = (0..n)
        .map(|i| {
            let v = model.add_binary(format!("eta_{i}"));
            if !rho[i] {
                model.set_bounds(v, 0.0, 0.0);
            }
            (i, v)
        })
        .collect();
    let gamma: Vec<(EdgeId, VarId)> = net
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| (e, model.add_continuous(format!("gamma_{e}"), 0.0, edge.upper)))
        .collect();
    if !gamma.is_empty() {
        model.add_constraint(
            "budget",
            gamma.iter().map(|&(e, v)| (v, net.edge(e).cost_rate)).collect(),
            Cmp::Le,
            inst.budget,
        );
    }

    let mut potentials = Vec::new();
    for &i in &covered {
        let block: Vec<VarId> = (0..n)
            .map(|k| {
                let hi = if x.contains(k) { 0.0 } else { m_k[k] };
                let var = model.add_continuous(format!("pi_{i}_{k}"), 0.0, hi);
                potentials.push(PotentialVar {
                    block: Some(i),
                    node: k,
                    var,
                });
                var
            })
            .collect();
        model.add_constraint(
            format!("link_{i}"),
            vec![(eta[i].1, inst.radius), (block[i], -1.0)],
            Cmp::Le,
            0.0,
        );
        for &(e, g) in &gamma {
            let edge = net.edge(e);
            for (k, l) in [(edge.a, edge.b), (edge.b, edge.a)] {
                model.add_constraint(
                    format!("arc_{i}_{k}_{l}"),
                    vec![(block[k], 1.0), (block[l], -1.0), (g, -1.0)],
                    Cmp::Le,
                    edge.length,
                );
            }
        }
    }
    model.set_objective(eta.iter().map(|&(i, v)| (v, net.weight(i) as f64)).collect());

    Ok(AttackerModel {
        model,
        covered,
        eta,
        gamma,
        potentials,
        arc_edges: (0..net.edge_count()).collect(),
    })
}

/// All-zero point: no downgrade, nothing un-covered, zero potentials.
fn zero_point(am: &AttackerModel) -> Vec<f64> {
    vec![0.0; am.model.var_count()]
}

/// Solves a built attacker model and checks the answer against the
/// shortest-path evaluator.
pub fn solve_attacker_model(
    inst: &Instance,
    x: &FacilitySet,
    am: &AttackerModel,
    backend: &dyn MilpBackend,
    time_limit: Option<Duration>,
) -> Result<AttackerResult> {
    let params = SolveParams::default()
        .with_time_limit(time_limit)
        .with_warm_start(zero_point(am));
    let out = backend.solve(&am.model, &params)?;
    // Stopped before any incumbent: the zero point is always feasible.
    let fallback = zero_point(am);
    let (primal, raw) = match (&out.status, &out.primal) {
        (Status::TimeLimit, None) => (&fallback, 0.0),
        (Status::Infeasible | Status::Unbounded, _) | (_, None) => {
            return Err(Error::Solver(SolverError::Backend(format!(
                "attacker model {} ended with status {} and no incumbent",
                am.model.name, out.status
            ))))
        }
        (_, Some(p)) => (p, out.objective.unwrap_or(0.0)),
    };

    let net = &inst.network;
    let q = raw.round();
    if (raw - q).abs() > INTEGRALITY_TOL || q < 0.0 {
        return Err(Error::Solver(SolverError::Backend(format!(
            "attacker objective {raw} is not integral"
        ))));
    }
    let q = q as u64;
    let uncovered: Vec<NodeId> = am
        .eta
        .iter()
        .filter(|&&(_, v)| primal[v.index()] > 0.5)
        .map(|&(i, _)| i)
        .collect();
    if net.demand(&uncovered) != q {
        return Err(Error::Solver(SolverError::Backend(
            "un-covered node weights disagree with the objective".into(),
        )));
    }

    let mut g = vec![0.0; inst.m()];
    for &(e, v) in &am.gamma {
        g[e] = primal[v.index()];
    }
    let gamma = Downgrade::new(net, g)?;
    if gamma.cost(net) > inst.budget + BUDGET_TOL {
        return Err(Error::Solver(SolverError::Backend(format!(
            "downgrade cost {} exceeds budget {}",
            gamma.cost(net),
            inst.budget
        ))));
    }
    let evaluated = uncovered_after(net, x, &gamma, inst.radius)?;
    if let Some(&bad) = uncovered.iter().find(|&&i| !evaluated.contains(i)) {
        return Err(Error::Solver(SolverError::Backend(format!(
            "node {bad} is marked un-covered but remains within the radius"
        ))));
    }

    let mut best_bound = out.best_bound;
    if out.status == Status::Optimal {
        best_bound = q as f64;
    }
    Ok(AttackerResult {
        facilities: x.clone(),
        gamma,
        uncovered,
        objective: q,
        status: out.status,
        best_bound,
        potentials: am
            .potentials
            .iter()
            .map(|pv| (pv.node, primal[pv.var.index()]))
            .collect(),
    })
}

/// Solves the attacker's problem with the reduced model.
///
/// With a time limit the status may be [`Status::TimeLimit`]; the returned
/// downgrade is then feasible but `objective` may understate the optimum.
pub fn solve_attacker(inst: &Instance, x: &FacilitySet, time_limit: Option<Duration>) -> Result<AttackerResult> {
    let am = build_attacker_model_reduced(inst, x)?;
    solve_attacker_model(inst, x, &am, &solver::MicroLpBackend, time_limit)
}

/// Solves the attacker's problem with the super-indexed model.
pub fn solve_attacker_full(inst: &Instance, x: &FacilitySet) -> Result<AttackerResult> {
    let am = build_attacker_model_full(inst, x)?;
    solve_attacker_model(inst, x, &am, &solver::MicroLpBackend, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::{fig1, path3};
    use crate::graph::{coverage, Edge, Node};

    fn fs(v: &[usize], n: usize) -> FacilitySet {
        FacilitySet::new(v.iter().copied(), n).unwrap()
    }

    #[test]
    fn big_m_on_path() {
        let net = path3(1.0);
        let m = big_m(&net, 1).unwrap();
        assert_eq!(m[0], 4.0);
        assert_eq!(m[1], 2.0);
        assert_eq!(big_m(&net, 3).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn big_m_triangle() {
        let nodes = vec![Node::new(1); 3];
        let edges = vec![
            Edge::new(0, 1, 1.0, 1.0, 0.0),
            Edge::new(1, 2, 1.0, 1.0, 0.0),
            Edge::new(0, 2, 1.0, 1.0, 0.0),
        ];
        let net = Network::new(nodes, edges).unwrap();
        assert_eq!(big_m(&net, 1).unwrap(), vec![1.0; 3]);
    }

    #[test]
    fn fig1_arc_restriction_drops_l_m() {
        let net = fig1([1; 5]);
        let inst = Instance::new(net, 2, 4.0, 1.0).unwrap();
        let am = build_attacker_model_reduced(&inst, &fs(&[3, 4], 5)).unwrap();
        assert!(am.model.constraint("arc_1_2").is_none());
        assert!(am.model.constraint("arc_2_1").is_none());
        // Edges inside V^x1 = {i, l, x1} and V^x2 = {i, m, x2} stay.
        for name in ["arc_0_1", "arc_1_0", "arc_1_3", "arc_0_3", "arc_0_2", "arc_2_4", "arc_0_4"] {
            assert!(am.model.constraint(name).is_some(), "{name} missing");
        }
        assert_eq!(am.arc_edges.len(), 6);
    }

    #[test]
    fn tiny_radius_only_facilities() {
        let net = fig1([1; 5]);
        let inst = Instance::new(net, 2, 0.5, 100.0).unwrap();
        let x = fs(&[0, 1], 5);
        let am = build_attacker_model_reduced(&inst, &x).unwrap();
        assert_eq!(am.covered, vec![0, 1]);
        assert_eq!(am.eta.len(), 2);
        let res = solve_attacker(&inst, &x, None).unwrap();
        assert_eq!(res.objective, 0);
    }

    #[test]
    fn zero_budget_means_no_attack() {
        let net = fig1([3, 1, 4, 1, 5]);
        let inst = Instance::new(net, 1, 4.0, 0.0).unwrap();
        let res = solve_attacker(&inst, &fs(&[3], 5), None).unwrap();
        assert_eq!(res.objective, 0);
        assert!(res.gamma.is_zero());
        assert!(res.is_optimal());
    }

    #[test]
    fn fig1_cheapest_uncovering() {
        // X = {x1}, R = 4: C(X) = {x1, l, i}. Pushing l costs 2.5 on [l,x1];
        // pushing i costs 1.25 on [i,x1] (its detour through l is 4).
        let net = fig1([5, 2, 1, 1, 1]);
        let inst = Instance::new(net.clone(), 1, 4.0, 1.25).unwrap();
        let x = fs(&[3], 5);
        let res = solve_attacker(&inst, &x, None).unwrap();
        assert_eq!(res.objective, 5);
        assert_eq!(res.uncovered, vec![0]);
        let inst = Instance::new(net, 1, 4.0, 3.75).unwrap();
        let res = solve_attacker(&inst, &x, None).unwrap();
        assert_eq!(res.objective, 7);
        assert_eq!(res.uncovered, vec![0, 1]);
    }

    #[test]
    fn unlimited_budget_matches_full_downgrade() {
        let net = fig1([5, 2, 7, 1, 3]);
        let b = net.max_budget();
        let inst = Instance::new(net.clone(), 1, 4.0, b).unwrap();
        let x = fs(&[0], 5);
        let before = coverage(&net, &inst.zero_downgrade(), &x, 4.0).unwrap().demand;
        let after = coverage(&net, &inst.full_downgrade(), &x, 4.0).unwrap().demand;
        let res = solve_attacker(&inst, &x, None).unwrap();
        assert_eq!(res.objective, before - after);
        assert_eq!(solve_attacker_full(&inst, &x).unwrap().objective, before - after);
    }

    #[test]
    fn wrong_facility_count_is_input_error() {
        let inst = Instance::new(fig1([1; 5]), 2, 4.0, 1.0).unwrap();
        assert!(matches!(
            build_attacker_model_reduced(&inst, &fs(&[3], 5)),
            Err(Error::InvalidInput(_))
        ));
        assert!(build_attacker_model_full(&inst, &fs(&[0, 1, 2], 5)).is_err());
    }

    #[test]
    fn full_model_zero_budget() {
        let inst = Instance::new(fig1([1; 5]), 2, 4.0, 0.0).unwrap();
        assert_eq!(solve_attacker_full(&inst, &fs(&[3, 4], 5)).unwrap().objective, 0);
    }
}
