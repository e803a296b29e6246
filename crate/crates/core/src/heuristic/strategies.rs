//! Starting facility sets: MCLP optima on guessed downgrades.

use crate::error::{Error, Result};
use crate::graph::{Downgrade, FacilitySet};
use crate::instance::Instance;
use crate::mclp::solve_mclp;

/// Strategy codes are `0..STRATEGY_COUNT`.
pub const STRATEGY_COUNT: u8 = 9;

/// Downgrade and radius whose MCLP optimum is starting set `code`:
///
/// * 0: no downgrade
/// * 1: `gamma = u`
/// * 2: `min(B / |E|, u_e)`
/// * 3: `min(u_e B / sum u, u_e)`
/// * 4: cheapest cost rate first until the budget runs out
/// * 5, 6, 7: no downgrade, radius at 80%, 70%, 60%
/// * 8: `u_e / 2`
pub fn starting_gamma(inst: &Instance, code: u8) -> Result<(Downgrade, f64)> {
    let net = &inst.network;
    let b = inst.budget;
    let m = inst.m();
    let upper = || net.edges().iter().map(|e| e.upper);
    let gamma: Vec<f64> = match code {
        0 | 5 | 6 | 7 => vec![0.0; m],
        1 => upper().collect(),
        2 => {
            let share = if m == 0 { 0.0 } else { b / m as f64 };
            upper().map(|u| share.min(u)).collect()
        }
        3 => {
            let total: f64 = upper().sum();
            if total > 0.0 {
                upper().map(|u| (u * b / total).min(u)).collect()
            } else {
                vec![0.0; m]
            }
        }
        4 => {
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| net.edge(x).cost_rate.total_cmp(&net.edge(y).cost_rate).then(x.cmp(&y)));
            let mut g = vec![0.0; m];
            let mut left = b;
            for e in order {
                if left <= 0.0 {
                    break;
                }
                let edge = net.edge(e);
                let full = edge.cost_rate * edge.upper;
                if full <= left {
                    g[e] = edge.upper;
                    left -= full;
                } else {
                    g[e] = left / edge.cost_rate;
                    left = 0.0;
                }
            }
            g
        }
        8 => upper().map(|u| u / 2.0).collect(),
        _ => return Err(Error::invalid(format!("unknown starting strategy {code}"))),
    };
    let radius = match code {
        5 => 0.8 * inst.radius,
        6 => 0.7 * inst.radius,
        7 => 0.6 * inst.radius,
        _ => inst.radius,
    };
    Ok((Downgrade::new(net, gamma)?, radius))
}

pub fn starting_set(inst: &Instance, code: u8) -> Result<FacilitySet> {
    let (gamma, radius) = starting_gamma(inst, code)?;
    Ok(solve_mclp(&inst.network, &gamma, inst.p, radius)?.facilities)
}
