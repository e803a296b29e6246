//! Instance reduction that preserves the optimal value.
//!
//! Under strict coverage an edge with `l_e >= R` can never lie on a path of
//! length `< R`, so it is dropped together with its cost and bound. For the
//! remaining edges, lengthening past `R - l_e` buys the attacker nothing, so
//! `u_e` is capped at `R - l_e`. Nodes are never removed.

use serde::Serialize;

use crate::error::Result;
use crate::graph::{Edge, EdgeId, Network};
use crate::instance::Instance;

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PreprocessReport {
    /// Original ids of removed edges.
    pub removed: Vec<EdgeId>,
    /// Original ids of edges whose upper bound was lowered.
    pub tightened: Vec<EdgeId>,
    /// `kept[k]` is the original id of edge `k` in the reduced network.
    pub kept: Vec<EdgeId>,
}

pub fn preprocess(inst: &Instance) -> Result<Instance> {
    preprocess_with_report(inst).map(|(i, _)| i)
}

pub fn preprocess_with_report(inst: &Instance) -> Result<(Instance, PreprocessReport)> {
    let r = inst.radius;
    let mut report = PreprocessReport::default();
    let mut edges = Vec::with_capacity(inst.m());
    for (id, e) in inst.network.edges().iter().enumerate() {
        if e.length >= r {
            report.removed.push(id);
            continue;
        }
        let mut upper = e.upper;
        if e.length + e.upper >= r && r - e.length < e.upper {
            upper = r - e.length;
            report.tightened.push(id);
        }
        report.kept.push(id);
        edges.push(Edge::new(e.a, e.b, e.length, e.cost_rate, upper));
    }
    let network = Network::new(inst.network.nodes().to_vec(), edges)?;
    let reduced = Instance::new(network, inst.p, inst.radius, inst.budget)?;
    Ok((reduced, report))
}
