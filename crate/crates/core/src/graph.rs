//! Networks, downgrades and coverage.
//!
//! Coverage is strict: node `i` is covered by a facility set `X` under a
//! downgrade `gamma` when `d_i(X, gamma) < R - eps`. The small `eps` absorbs
//! floating point noise from LP solves, which return `d = R` up to roundoff
//! when the attacker pushes a node exactly to the radius.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;
pub type EdgeId = usize;

/// Default radius tolerance used by every coverage evaluation.
pub const DEFAULT_EPS_COV: f64 = 1e-6;

/// Tolerance accepted when checking `0 <= gamma_e <= u_e` on externally
/// produced vectors (LP output). Values inside the slack are clamped.
const GAMMA_SLACK: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub weight: u64,
    pub coords: Option<(f64, f64)>,
}

impl Node {
    pub fn new(weight: u64) -> Self {
        Node { weight, coords: None }
    }

    pub fn with_coords(weight: u64, x: f64, y: f64) -> Self {
        Node {
            weight,
            coords: Some((x, y)),
        }
    }
}

/// Undirected edge. Endpoints are stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub length: f64,
    pub cost_rate: f64,
    pub upper: f64,
}

impl Edge {
    pub fn new(a: NodeId, b: NodeId, length: f64, cost_rate: f64, upper: f64) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        Edge {
            a,
            b,
            length,
            cost_rate,
            upper,
        }
    }

    pub fn other(&self, v: NodeId) -> NodeId {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// An immutable undirected network with node demands and downgradable edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(NodeId, EdgeId)>>,
}

impl Network {
    /// Builds a network, checking ids, self-loops, parallel edges and the
    /// sign conditions `l > 0`, `c > 0`, `u >= 0`.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let n = nodes.len();
        let mut adj = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            if e.a >= n || e.b >= n {
                return Err(Error::invalid(format!(
                    "edge {idx} references node outside 0..{n}"
                )));
            }
            if e.a == e.b {
                return Err(Error::invalid(format!("edge {idx} is a self-loop on {}", e.a)));
            }
            if !(e.length > 0.0) || !e.length.is_finite() {
                return Err(Error::invalid(format!("edge {idx} has non-positive length")));
            }
            if !(e.cost_rate > 0.0) || !e.cost_rate.is_finite() {
                return Err(Error::invalid(format!("edge {idx} has non-positive cost rate")));
            }
            if !(e.upper >= 0.0) || !e.upper.is_finite() {
                return Err(Error::invalid(format!("edge {idx} has negative upper bound")));
            }
            if adj[e.a].iter().any(|&(v, _)| v == e.b) {
                return Err(Error::invalid(format!(
                    "duplicate edge between {} and {}",
                    e.a, e.b
                )));
            }
            let e = Edge::new(e.a, e.b, e.length, e.cost_rate, e.upper);
            adj[e.a].push((e.b, idx));
            adj[e.b].push((e.a, idx));
        }
        let edges = edges
            .into_iter()
            .map(|e| Edge::new(e.a, e.b, e.length, e.cost_rate, e.upper))
            .collect();
        Ok(Network { nodes, edges, adj })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn weight(&self, v: NodeId) -> u64 {
        self.nodes[v].weight
    }

    pub fn total_weight(&self) -> u64 {
        self.nodes.iter().map(|n| n.weight).sum()
    }

    /// Neighbours of `v` together with the connecting edge.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adj[v]
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.adj
            .get(a)?
            .iter()
            .find(|&&(v, _)| v == b)
            .map(|&(_, e)| e)
    }

    /// Cost of downgrading every edge to its upper bound, `sum_e c_e u_e`.
    pub fn max_budget(&self) -> f64 {
        self.edges.iter().map(|e| e.cost_rate * e.upper).sum()
    }

    /// Weighted demand of a node set.
    pub fn demand<'a>(&self, nodes: impl IntoIterator<Item = &'a NodeId>) -> u64 {
        nodes.into_iter().map(|&v| self.nodes[v].weight).sum()
    }
}

/// Per-edge length increase `gamma`, with `0 <= gamma_e <= u_e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Downgrade(Vec<f64>);

impl Downgrade {
    pub fn zero(edge_count: usize) -> Self {
        Downgrade(vec![0.0; edge_count])
    }

    /// Every edge at its upper bound, i.e. the network `N(u)`.
    pub fn full(net: &Network) -> Self {
        Downgrade(net.edges().iter().map(|e| e.upper).collect())
    }

    /// Validates a raw vector against `net`. Entries within a tiny slack of
    /// the box are clamped back inside it.
    pub fn new(net: &Network, mut gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != net.edge_count() {
            return Err(Error::invalid(format!(
                "downgrade has {} entries, network has {} edges",
                gamma.len(),
                net.edge_count()
            )));
        }
        for (idx, (g, e)) in gamma.iter_mut().zip(net.edges()).enumerate() {
            if !g.is_finite() || *g < -GAMMA_SLACK || *g > e.upper + GAMMA_SLACK {
                return Err(Error::invalid(format!(
                    "downgrade {g} on edge {idx} outside [0, {}]",
                    e.upper
                )));
            }
            *g = g.clamp(0.0, e.upper);
        }
        Ok(Downgrade(gamma))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.0[e]
    }

    /// Total downgrading cost `sum_e c_e gamma_e`.
    pub fn cost(&self, net: &Network) -> f64 {
        self.0
            .iter()
            .zip(net.edges())
            .map(|(g, e)| g * e.cost_rate)
            .sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&g| g == 0.0)
    }
}

/// A set of facility nodes, kept sorted and duplicate free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FacilitySet(Vec<NodeId>);

impl FacilitySet {
    pub fn new(nodes: impl IntoIterator<Item = NodeId>, node_count: usize) -> Result<Self> {
        let mut v: Vec<NodeId> = nodes.into_iter().collect();
        v.sort_unstable();
        let before = v.len();
        v.dedup();
        if v.len() != before {
            return Err(Error::invalid("facility set contains duplicates"));
        }
        if let Some(&bad) = v.iter().find(|&&x| x >= node_count) {
            return Err(Error::invalid(format!(
                "facility {bad} outside 0..{node_count}"
            )));
        }
        Ok(FacilitySet(v))
    }

    /// Checks `|X| = p` in addition to [`FacilitySet::new`].
    pub fn with_size(
        nodes: impl IntoIterator<Item = NodeId>,
        node_count: usize,
        p: usize,
    ) -> Result<Self> {
        let set = Self::new(nodes, node_count)?;
        if set.len() != p {
            return Err(Error::invalid(format!(
                "facility set has {} nodes, expected {p}",
                set.len()
            )));
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }

    /// `(X \ {out}) U {inn}`.
    pub fn swap(&self, out: NodeId, inn: NodeId) -> FacilitySet {
        let mut v: Vec<NodeId> = self.0.iter().copied().filter(|&x| x != out).collect();
        if !v.contains(&inn) {
            v.push(inn);
        }
        v.sort_unstable();
        FacilitySet(v)
    }

    /// `X \ {out}`; may be empty.
    pub fn without(&self, out: NodeId) -> FacilitySet {
        FacilitySet(self.0.iter().copied().filter(|&x| x != out).collect())
    }
}

impl std::fmt::Display for FacilitySet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// Distance from each node to its nearest source, `+inf` when unreachable.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMap(Vec<f64>);

impl DistanceMap {
    pub fn get(&self, v: NodeId) -> f64 {
        self.0[v]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Nodes covered by some rule together with their total demand.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CoverageSet {
    pub nodes: Vec<NodeId>,
    pub demand: u64,
}

impl CoverageSet {
    fn from_mask(net: &Network, mask: impl Iterator<Item = bool>) -> Self {
        let nodes: Vec<NodeId> = mask
            .enumerate()
            .filter_map(|(v, hit)| hit.then_some(v))
            .collect();
        let demand = net.demand(&nodes);
        CoverageSet { nodes, demand }
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.nodes.binary_search(&v).is_ok()
    }
}

/// `d < R - eps`.
#[inline]
pub fn within_radius(d: f64, radius: f64, eps: f64) -> bool {
    d < radius - eps
}

/// Multi-source Dijkstra on edge lengths `l_e + gamma_e`. Heap ties are
/// popped by smaller node id.
pub(crate) fn dijkstra(net: &Network, gamma: &[f64], sources: &[NodeId]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.node_count()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Reverse((OrderedFloat(0.0), s)));
    }
    while let Some(Reverse((OrderedFloat(d), v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, e) in net.neighbors(v) {
            let nd = d + net.edges[e].length + gamma[e];
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((OrderedFloat(nd), w)));
            }
        }
    }
    dist
}

fn check_gamma(net: &Network, gamma: &Downgrade) -> Result<()> {
    if gamma.len() != net.edge_count() {
        return Err(Error::invalid(format!(
            "downgrade has {} entries, network has {} edges",
            gamma.len(),
            net.edge_count()
        )));
    }
    Ok(())
}

/// Exact multi-source shortest-path distances in `N(gamma)`.
pub fn shortest_distances(
    net: &Network,
    gamma: &Downgrade,
    sources: &FacilitySet,
) -> Result<DistanceMap> {
    check_gamma(net, gamma)?;
    if sources.is_empty() {
        return Err(Error::invalid("shortest_distances needs at least one source"));
    }
    Ok(DistanceMap(dijkstra(net, gamma.as_slice(), sources.as_slice())))
}

/// All-pairs distances in `N(gamma)`, one Dijkstra per node. Row `j` holds
/// `d(., j, gamma)`; the matrix is symmetric.
pub fn all_pairs_distances(net: &Network, gamma: &Downgrade) -> Result<Vec<Vec<f64>>> {
    check_gamma(net, gamma)?;
    Ok((0..net.node_count())
        .map(|j| dijkstra(net, gamma.as_slice(), &[j]))
        .collect())
}

/// `C(X, gamma)` computed from scratch (not intersected with `C(X)`).
pub fn coverage(
    net: &Network,
    gamma: &Downgrade,
    facilities: &FacilitySet,
    radius: f64,
) -> Result<CoverageSet> {
    coverage_eps(net, gamma, facilities, radius, DEFAULT_EPS_COV)
}

pub fn coverage_eps(
    net: &Network,
    gamma: &Downgrade,
    facilities: &FacilitySet,
    radius: f64,
    eps: f64,
) -> Result<CoverageSet> {
    check_gamma(net, gamma)?;
    if facilities.is_empty() {
        return Ok(CoverageSet::default());
    }
    let dist = dijkstra(net, gamma.as_slice(), facilities.as_slice());
    Ok(CoverageSet::from_mask(
        net,
        dist.iter().map(|&d| within_radius(d, radius, eps)),
    ))
}

/// `C-bar(X, gamma) = C(X) \ C(X, gamma)`: nodes covered before the downgrade
/// but not after it.
pub fn uncovered_after(
    net: &Network,
    facilities: &FacilitySet,
    gamma: &Downgrade,
    radius: f64,
) -> Result<CoverageSet> {
    check_gamma(net, gamma)?;
    if facilities.is_empty() {
        return Ok(CoverageSet::default());
    }
    let before = dijkstra(net, &vec![0.0; net.edge_count()], facilities.as_slice());
    let after = dijkstra(net, gamma.as_slice(), facilities.as_slice());
    Ok(CoverageSet::from_mask(
        net,
        before.iter().zip(&after).map(|(&b, &a)| {
            within_radius(b, radius, DEFAULT_EPS_COV) && !within_radius(a, radius, DEFAULT_EPS_COV)
        }),
    ))
}

/// Demand still covered after the downgrade, `sum_{i in C(X, gamma)} w_i`,
/// where `C(X, gamma)` is restricted to `C(X)`.
pub fn covered_after(
    net: &Network,
    facilities: &FacilitySet,
    gamma: &Downgrade,
    radius: f64,
) -> Result<u64> {
    // Lengthening never shortens a path, so C(X, gamma) is already inside C(X).
    Ok(coverage(net, gamma, facilities, radius)?.demand)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    const I: usize = 0;
    const L: usize = 1;
    const M: usize = 2;
    const X1: usize = 3;
    const X2: usize = 4;

    fn fs(v: &[usize], n: usize) -> FacilitySet {
        FacilitySet::new(v.iter().copied(), n).unwrap()
    }

    #[test]
    fn fig1_distances_from_x1() {
        let net = fig1([1; 5]);
        let d = shortest_distances(&net, &Downgrade::zero(7), &fs(&[X1], 5)).unwrap();
        assert_eq!(d.get(I), 2.75);
        assert_eq!(d.get(L), 1.5);
        assert_eq!(d.get(M), 4.5);
        assert_eq!(d.get(X1), 0.0);
    }

    #[test]
    fn all_sources_gives_zero() {
        let net = fig1([1; 5]);
        let d = shortest_distances(&net, &Downgrade::zero(7), &fs(&[0, 1, 2, 3, 4], 5)).unwrap();
        assert!(d.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn path_with_downgrade() {
        let net = path3(1.0);
        let g = Downgrade::new(&net, vec![0.5, 0.0]).unwrap();
        let d = shortest_distances(&net, &g, &fs(&[0], 3)).unwrap();
        assert_eq!(d.as_slice(), &[0.0, 1.5, 2.5]);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let net = path3(1.0);
        let err = shortest_distances(&net, &Downgrade::zero(5), &fs(&[0], 3)).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
        assert!(shortest_distances(&net, &Downgrade::zero(2), &fs(&[], 3)).is_err());
    }

    #[test]
    fn fig1_coverage_strict() {
        let net = fig1([1; 5]);
        let c = coverage(&net, &Downgrade::zero(7), &fs(&[X1], 5), 4.0).unwrap();
        assert!(c.contains(X1) && c.contains(I) && c.contains(L));
        assert!(!c.contains(M));
    }

    #[test]
    fn tiny_radius_only_self_coverage() {
        let net = fig1([3, 4, 5, 6, 7]);
        let c = coverage(&net, &Downgrade::zero(7), &fs(&[L, X2], 5), 0.001).unwrap();
        assert_eq!(c.nodes, vec![L, X2]);
        assert_eq!(c.demand, 4 + 7);
    }

    #[test]
    fn distance_exactly_r_is_not_covered() {
        let net = path3(1.0);
        let c = coverage(&net, &Downgrade::zero(2), &fs(&[0], 3), 2.0).unwrap();
        assert_eq!(c.nodes, vec![0, 1]);
    }

    #[test]
    fn uncovered_after_zero_gamma_is_empty() {
        let net = fig1([1; 5]);
        let u = uncovered_after(&net, &fs(&[X1], 5), &Downgrade::zero(7), 4.0).unwrap();
        assert!(u.nodes.is_empty());
        assert_eq!(u.demand, 0);
    }

    #[test]
    fn fig1_lengthening_l_x1_uncovers_l_only() {
        let net = fig1([1, 2, 4, 8, 16]);
        let e = net.edge_between(L, X1).unwrap();
        let mut g = vec![0.0; 7];
        g[e] = 2.5;
        let g = Downgrade::new(&net, g).unwrap();
        let d = shortest_distances(&net, &g, &fs(&[X1], 5)).unwrap();
        assert_eq!(d.get(L), 4.0);
        assert_eq!(d.get(I), 2.75);
        let u = uncovered_after(&net, &fs(&[X1], 5), &g, 4.0).unwrap();
        assert_eq!(u.nodes, vec![L]);
        assert_eq!(u.demand, 2);
    }

    #[test]
    fn disconnected_node_is_infinite_and_uncovered() {
        let nodes = vec![Node::new(1); 3];
        let net = Network::new(nodes, vec![Edge::new(0, 1, 1.0, 1.0, 0.0)]).unwrap();
        let d = shortest_distances(&net, &Downgrade::zero(1), &fs(&[0], 3)).unwrap();
        assert!(d.get(2).is_infinite());
        let c = coverage(&net, &Downgrade::zero(1), &fs(&[0], 3), 1e9).unwrap();
        assert_eq!(c.nodes, vec![0, 1]);
    }

    #[test]
    fn network_rejects_bad_edges() {
        let nodes = || vec![Node::new(1); 3];
        assert!(Network::new(nodes(), vec![Edge::new(0, 0, 1.0, 1.0, 0.0)]).is_err());
        assert!(Network::new(nodes(), vec![Edge::new(0, 3, 1.0, 1.0, 0.0)]).is_err());
        assert!(Network::new(nodes(), vec![Edge::new(0, 1, 0.0, 1.0, 0.0)]).is_err());
        assert!(Network::new(nodes(), vec![Edge::new(0, 1, 1.0, 0.0, 0.0)]).is_err());
        assert!(Network::new(nodes(), vec![Edge::new(0, 1, 1.0, 1.0, -1.0)]).is_err());
        let dup = vec![Edge::new(0, 1, 1.0, 1.0, 0.0), Edge::new(1, 0, 2.0, 1.0, 0.0)];
        assert!(Network::new(nodes(), dup).is_err());
    }

    #[test]
    fn downgrade_box_is_enforced() {
        let net = path3(1.0);
        assert!(Downgrade::new(&net, vec![1.5, 0.0]).is_err());
        assert!(Downgrade::new(&net, vec![-0.1, 0.0]).is_err());
        let g = Downgrade::new(&net, vec![1.0 + 1e-9, -1e-9]).unwrap();
        assert_eq!(g.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn facility_set_ops() {
        let x = fs(&[4, 1], 5);
        assert_eq!(x.as_slice(), &[1, 4]);
        assert_eq!(x.swap(4, 0).as_slice(), &[0, 1]);
        assert!(FacilitySet::new([1, 1], 5).is_err());
        assert!(FacilitySet::with_size([1], 5, 2).is_err());
        assert_eq!(x.to_string(), "{1,4}");
    }
}
