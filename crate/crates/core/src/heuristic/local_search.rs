//! 1-1 local searches: swap one facility out and one node in.
//!
//! All three searches accept a move only if the exact post-attack value
//! strictly improves, and stop at the first iteration without one. Ties
//! between candidates go to the smallest `(out, in)` pair.

use std::time::Duration;

use super::{Eval, Evaluator, Solution, Version};
use crate::error::Result;
use crate::graph::{Downgrade, FacilitySet, Network, NodeId};
use crate::mclp::cover_lists;

/// Total weight of the union of the given cover lists.
fn union_weight<'a>(net: &Network, lists: impl IntoIterator<Item = &'a Vec<NodeId>>, mask: &mut [bool]) -> u64 {
    mask.iter_mut().for_each(|m| *m = false);
    let mut w = 0;
    for list in lists {
        for &k in list {
            if !mask[k] {
                mask[k] = true;
                w += net.weight(k);
            }
        }
    }
    w
}

fn outsiders(x: &FacilitySet, n: usize) -> Vec<NodeId> {
    (0..n).filter(|&j| !x.contains(j)).collect()
}

/// Accepts `e` for `x` if it beats `cur`; returns whether it did.
fn try_accept(cur: &mut Solution, x: FacilitySet, e: Eval) -> bool {
    if e.value > cur.value {
        cur.facilities = x;
        cur.gamma = e.gamma;
        cur.value = e.value;
        cur.trace.ls_moves += 1;
        true
    } else {
        false
    }
}

/// Index of the largest value, first on ties.
fn argmax(values: impl IntoIterator<Item = u64>) -> Option<usize> {
    let mut best: Option<(usize, u64)> = None;
    for (k, v) in values.into_iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k)
}

/// Exact re-solve of the chosen candidate when its score came from a
/// time-limited solve.
fn confirm(ev: &Evaluator, x: &FacilitySet, e: Eval) -> Result<Eval> {
    if e.exact {
        Ok(e)
    } else {
        ev.exact(x)
    }
}

/// Fixed Out-In: the swap is chosen by coverage in `N(gamma)` (version a)
/// or with the entering node's coverage taken in `N(u)` (version b); only
/// the chosen set gets an attacker solve.
pub fn ls_fixed_out_in(ev: &Evaluator, sol: Solution, version: Version, max_iters: usize) -> Result<Solution> {
    let inst = ev.instance();
    let net = &inst.network;
    let n = inst.n();
    let cover_u = match version {
        Version::A => None,
        Version::B => Some(cover_lists(net, &Downgrade::full(net), inst.radius)?),
    };
    let mut mask = vec![false; n];
    let mut cur = sol;
    for _ in 0..max_iters {
        cur.trace.ls_iterations += 1;
        let cover_g = cover_lists(net, &cur.gamma, inst.radius)?;
        let outside = outsiders(&cur.facilities, n);
        let mut best: Option<(u64, NodeId, NodeId)> = None;
        for i in cur.facilities.iter() {
            let stay: Vec<&Vec<NodeId>> = cur.facilities.iter().filter(|&k| k != i).map(|k| &cover_g[k]).collect();
            for &j in &outside {
                let entering = match &cover_u {
                    None => &cover_g[j],
                    Some(cu) => &cu[j],
                };
                let score = union_weight(net, stay.iter().copied().chain([entering]), &mut mask);
                if best.is_none_or(|(b, _, _)| score > b) {
                    best = Some((score, i, j));
                }
            }
        }
        let Some((_, i, j)) = best else { break };
        let x = cur.facilities.swap(i, j);
        let e = ev.exact(&x)?;
        if !try_accept(&mut cur, x, e) {
            break;
        }
    }
    Ok(cur)
}

/// Fixed Out-Optimal In: the leaving node loses the least exclusive
/// coverage in `N(gamma)` (version a) or `N(u)` (version b); every entering
/// node is then scored with an attacker solve.
pub fn ls_fixed_out_opt_in(
    ev: &Evaluator,
    sol: Solution,
    version: Version,
    max_iters: usize,
    time_limit: Option<Duration>,
) -> Result<Solution> {
    let inst = ev.instance();
    let net = &inst.network;
    let n = inst.n();
    let cover_u = match version {
        Version::A => None,
        Version::B => Some(cover_lists(net, &Downgrade::full(net), inst.radius)?),
    };
    let mut mask = vec![false; n];
    let mut cur = sol;
    for _ in 0..max_iters {
        cur.trace.ls_iterations += 1;
        let outside = outsiders(&cur.facilities, n);
        if outside.is_empty() {
            break;
        }
        let cover = match &cover_u {
            Some(cu) => cu.clone(),
            None => cover_lists(net, &cur.gamma, inst.radius)?,
        };
        // Exclusive loss of i = coverage of X minus coverage of X \ {i}.
        let all = union_weight(net, cur.facilities.iter().map(|k| &cover[k]), &mut mask);
        let mut leave: Option<(u64, NodeId)> = None;
        for i in cur.facilities.iter() {
            let rest = union_weight(net, cur.facilities.iter().filter(|&k| k != i).map(|k| &cover[k]), &mut mask);
            let loss = all - rest;
            if leave.is_none_or(|(b, _)| loss < b) {
                leave = Some((loss, i));
            }
        }
        let (_, i) = leave.expect("X is non-empty");
        let sets: Vec<FacilitySet> = outside.iter().map(|&j| cur.facilities.swap(i, j)).collect();
        let evals = ev.evaluate_all(&sets, time_limit)?;
        let k = argmax(evals.iter().map(|e| e.value)).expect("at least one candidate");
        let e = confirm(ev, &sets[k], evals[k].clone())?;
        if !try_accept(&mut cur, sets[k].clone(), e) {
            break;
        }
    }
    Ok(cur)
}

/// Optimal Out-In: every swap is scored with an attacker solve.
pub fn ls_optimal_out_in(
    ev: &Evaluator,
    sol: Solution,
    max_iters: usize,
    time_limit: Option<Duration>,
) -> Result<Solution> {
    let n = ev.instance().n();
    let mut cur = sol;
    for _ in 0..max_iters {
        cur.trace.ls_iterations += 1;
        let outside = outsiders(&cur.facilities, n);
        let sets: Vec<FacilitySet> = cur
            .facilities
            .iter()
            .flat_map(|i| outside.iter().map(move |&j| (i, j)))
            .map(|(i, j)| cur.facilities.swap(i, j))
            .collect();
        if sets.is_empty() {
            break;
        }
        let evals = ev.evaluate_all(&sets, time_limit)?;
        let k = argmax(evals.iter().map(|e| e.value)).expect("at least one candidate");
        let e = confirm(ev, &sets[k], evals[k].clone())?;
        if !try_accept(&mut cur, sets[k].clone(), e) {
            break;
        }
    }
    Ok(cur)
}
