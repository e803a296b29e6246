//! Maximal covering location under budgeted edge downgrading.
//!
//! A planner opens `p` facilities on an undirected network. An attacker then
//! lengthens edges, paying `c_e` per unit of extra length on edge `e` up to
//! `u_e`, within a budget `B`, to push as much initially covered demand as
//! possible to distance `>= R` from every facility. The planner maximizes the
//! demand that stays covered.
//!
//! The crate is organized bottom-up:
//!
//! * [`graph`]: networks, multi-source shortest paths and coverage sets.
//! * [`instance`]: random instance generation and the text file format.
//! * [`solver`]: a small LP/MILP modeling layer with a bundled
//!   branch-and-bound backend.
//! * [`attacker`]: the attacker's problem for fixed facilities.
//! * [`mclp`]: the classical maximal covering problem.
//! * [`preprocess`]: edge removal and upper-bound tightening.
//! * [`heuristic`]: alternating location/downgrading search and 1-1 local search.
//! * [`oracles`]: exhaustive leader enumeration and independent attacker oracles.
//! * [`metrics`] and [`bench`]: bounds, comparison percentages and CSV reports.

// `!(x >= 0.0)` style checks are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attacker;
pub mod bench;
pub mod error;
pub mod graph;
pub mod heuristic;
pub mod instance;
pub mod mclp;
pub mod metrics;
pub mod oracles;
pub mod preprocess;
pub mod solver;

pub use error::{Error, Result};
pub use graph::{Downgrade, FacilitySet, Network, DEFAULT_EPS_COV};
pub use instance::Instance;

/// Rounds half away from zero to two decimal places.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
