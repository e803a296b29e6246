//! Bounds and comparison metrics.

use serde::Serialize;

use crate::attacker::solve_attacker;
use crate::error::{Error, Result};
use crate::graph::{covered_after, FacilitySet};
use crate::instance::Instance;
use crate::mclp::solve_mclp;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    /// MCLP value on `N(u)`.
    pub lb: u64,
    pub x_lb: FacilitySet,
    /// MCLP value on `N`.
    pub ub: u64,
    pub x_ub: FacilitySet,
}

pub fn bounds(inst: &Instance) -> Result<Bounds> {
    let net = &inst.network;
    let low = solve_mclp(net, &inst.full_downgrade(), inst.p, inst.radius)?;
    let up = solve_mclp(net, &inst.zero_downgrade(), inst.p, inst.radius)?;
    Ok(Bounds {
        lb: low.covered_demand,
        x_lb: low.facilities,
        ub: up.covered_demand,
        x_ub: up.facilities,
    })
}

/// `(bs_t - bs_h) / bs_t * 100`: the heuristic's gap to the best known
/// value, negative when the heuristic is better.
pub fn gap_bs(bs_t: u64, bs_h: u64) -> Result<f64> {
    if bs_t == 0 {
        return Err(Error::invalid("gap is undefined for a best-known value of 0"));
    }
    Ok((bs_t as f64 - bs_h as f64) / bs_t as f64 * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Insight {
    /// Relative loss of locating as if there were no attacker.
    pub mi_o: f64,
    /// Relative loss of locating as if every edge were fully downgraded.
    pub mi_p: f64,
    /// Post-attack value of `X_UB`.
    pub s_xub: u64,
    /// Post-attack value of `X_LB`.
    pub s_xlb: u64,
}

/// Post-attack covered demand of `x` under an exact attacker response.
pub fn post_attack_value(inst: &Instance, x: &FacilitySet) -> Result<u64> {
    let res = solve_attacker(inst, x, None)?;
    covered_after(&inst.network, x, &res.gamma, inst.radius)
}

/// Compares the sequential optimistic and pessimistic location decisions
/// against a bilevel value `bs_h`.
pub fn managerial_insight(inst: &Instance, bs_h: u64) -> Result<Insight> {
    managerial_insight_with(inst, &bounds(inst)?, bs_h)
}

pub fn managerial_insight_with(inst: &Instance, b: &Bounds, bs_h: u64) -> Result<Insight> {
    if bs_h == 0 {
        return Err(Error::invalid("managerial insight needs a positive value"));
    }
    let s_xub = post_attack_value(inst, &b.x_ub)?;
    let s_xlb = post_attack_value(inst, &b.x_lb)?;
    let pct = |s: u64| (s as f64 - bs_h as f64) / bs_h as f64 * 100.0;
    Ok(Insight {
        mi_o: pct(s_xub),
        mi_p: pct(s_xlb),
        s_xub,
        s_xlb,
    })
}
