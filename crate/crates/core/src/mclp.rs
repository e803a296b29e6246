//! Classical maximal covering location on a (possibly downgraded) network.

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::graph::{all_pairs_distances, within_radius, Downgrade, FacilitySet, Network, NodeId, DEFAULT_EPS_COV};
use crate::solver::{self, Cmp, Model, Sense, SolveParams, Status, VarId};

/// Largest number of facility sets [`solve_mclp_enum`] will look at.
pub const MCLP_ENUM_GUARD: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MclpSolution {
    pub facilities: FacilitySet,
    pub covered_demand: u64,
}

/// `cover[j]` lists the nodes `i` with `d(i, j, gamma) < R - eps`.
pub fn cover_lists(net: &Network, gamma: &Downgrade, radius: f64) -> Result<Vec<Vec<NodeId>>> {
    let dist = all_pairs_distances(net, gamma)?;
    Ok(dist
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|&(_, &d)| within_radius(d, radius, DEFAULT_EPS_COV))
                .map(|(i, _)| i)
                .collect()
        })
        .collect())
}

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

fn check_p(net: &Network, p: usize) -> Result<()> {
    if p == 0 || p > net.node_count() {
        return Err(Error::invalid(format!(
            "p = {p} must lie in 1..={}",
            net.node_count()
        )));
    }
    Ok(())
}

fn covered_by(net: &Network, cover: &[Vec<NodeId>], facilities: &[NodeId], mask: &mut [bool]) -> u64 {
    mask.iter_mut().for_each(|m| *m = false);
    let mut demand = 0;
    for &j in facilities {
        for &i in &cover[j] {
            if !mask[i] {
                mask[i] = true;
                demand += net.weight(i);
            }
        }
    }
    demand
}

/// Builds `max sum w_i rho_i` s.t. `rho_i <= sum_{j covers i} x_j`,
/// `sum x_j = p`. `rho` is continuous in `[0,1]`; with binary `x` it takes
/// integral values at any optimum.
pub fn build_mclp_model(net: &Network, cover: &[Vec<NodeId>], p: usize) -> (Model, Vec<VarId>) {
    let n = net.node_count();
    let mut model = Model::new("mclp", Sense::Maximize);
    let x: Vec<VarId> = (0..n).map(|j| model.add_binary(format!("x_{j}"))).collect();
    let rho: Vec<VarId> = (0..n)
        .map(|i| model.add_continuous(format!("rho_{i}"), 0.0, 1.0))
        .collect();
    let mut coverers: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (j, list) in cover.iter().enumerate() {
        for &i in list {
            coverers[i].push(j);
        }
    }
    for i in 0..n {
        let mut terms = vec![(rho[i], 1.0)];
        terms.extend(coverers[i].iter().map(|&j| (x[j], -1.0)));
        model.add_constraint(format!("cover_{i}"), terms, Cmp::Le, 0.0);
    }
    model.add_constraint("card", x.iter().map(|&v| (v, 1.0)).collect(), Cmp::Eq, p as f64);
    model.set_objective(
        rho.iter()
            .enumerate()
            .map(|(i, &v)| (v, net.weight(i) as f64))
            .collect(),
    );
    (model, x)
}

/// Optimal MCLP on `N(gamma)` with radius `radius`, solved as a MILP.
pub fn solve_mclp(net: &Network, gamma: &Downgrade, p: usize, radius: f64) -> Result<MclpSolution> {
    check_p(net, p)?;
    let cover = cover_lists(net, gamma, radius)?;
    let (model, x) = build_mclp_model(net, &cover, p);
    let out = solver::solve(&model, &SolveParams::default())?;
    if out.status != Status::Optimal {
        return Err(Error::Solver(solver::SolverError::Backend(format!(
            "MCLP solve ended with status {}",
            out.status
        ))));
    }
    let chosen: Vec<NodeId> = x
        .iter()
        .enumerate()
        .filter(|&(_, &v)| out.value(v).unwrap_or(0.0) > 0.5)
        .map(|(j, _)| j)
        .collect();
    let facilities = FacilitySet::with_size(chosen, net.node_count(), p)?;
    let mut mask = vec![false; net.node_count()];
    let covered_demand = covered_by(net, &cover, facilities.as_slice(), &mut mask);
    let objective = out.objective.unwrap_or(0.0);
    if (objective - covered_demand as f64).abs() > 1e-4 {
        return Err(Error::Solver(solver::SolverError::Backend(format!(
            "MCLP objective {objective} disagrees with evaluated coverage {covered_demand}"
        ))));
    }
    Ok(MclpSolution {
        facilities,
        covered_demand,
    })
}

/// Exhaustive MCLP; ties keep the lexicographically smallest set.
pub fn solve_mclp_enum(net: &Network, gamma: &Downgrade, p: usize, radius: f64) -> Result<MclpSolution> {
    check_p(net, p)?;
    let n = net.node_count();
    let count = binomial(n, p);
    if count > MCLP_ENUM_GUARD {
        return Err(Error::GuardExceeded(format!(
            "C({n},{p}) = {count} facility sets exceeds {MCLP_ENUM_GUARD}"
        )));
    }
    let cover = cover_lists(net, gamma, radius)?;
    let mut mask = vec![false; n];
    let mut best: Option<(u64, Vec<NodeId>)> = None;
    for combo in (0..n).combinations(p) {
        let d = covered_by(net, &cover, &combo, &mut mask);
        if best.as_ref().is_none_or(|(b, _)| d > *b) {
            best = Some((d, combo));
        }
    }
    let (covered_demand, set) = best.expect("p <= n gives at least one set");
    Ok(MclpSolution {
        facilities: FacilitySet::new(set, n)?,
        covered_demand,
    })
}
