//! Alternating location-downgrading search.

use std::collections::HashSet;

use super::{Evaluator, Solution, Trace};
use crate::error::Result;
use crate::graph::FacilitySet;
use crate::mclp::solve_mclp;

/// Alternates attacker solves and MCLP solves on the downgraded network
/// until a facility set repeats or `max_iters` attacker solves were made.
/// Returns the best set seen, ties to the earliest.
pub fn alternating_search(ev: &Evaluator, x0: &FacilitySet, max_iters: usize) -> Result<Solution> {
    let inst = ev.instance();
    let mut visited = HashSet::new();
    let mut x = x0.clone();
    let mut best: Option<Solution> = None;
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        visited.insert(x.clone());
        let e = ev.exact(&x)?;
        if best.as_ref().is_none_or(|b| e.value > b.value) {
            best = Some(Solution {
                facilities: x.clone(),
                gamma: e.gamma.clone(),
                value: e.value,
                trace: Trace::default(),
            });
        }
        let next = solve_mclp(&inst.network, &e.gamma, inst.p, inst.radius)?.facilities;
        if visited.contains(&next) {
            break;
        }
        x = next;
    }
    let mut sol = best.expect("at least one iteration runs");
    sol.trace.alt_iterations = iterations;
    Ok(sol)
}
