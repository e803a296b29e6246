//! Instance builders shared by the integration tests.
#![allow(dead_code)]

use dmclp::graph::{Edge, Node};
use dmclp::instance::{generate, radius_for, GenConfig, PMode, RadiusMode};
use dmclp::preprocess::preprocess;
use dmclp::{round2, FacilitySet, Instance, Network};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const I: usize = 0;
pub const L: usize = 1;
pub const M: usize = 2;
pub const X1: usize = 3;
pub const X2: usize = 4;

/// The two-facility example graph: `[l,m]` = 3, `[i,l]` = `[i,m]` = 2.5,
/// `[i,x1]` = `[i,x2]` = 2.75, `[l,x1]` = `[m,x2]` = 1.5.
pub fn fig1(weights: [u64; 5], upper: f64) -> Network {
    let nodes = weights.iter().map(|&w| Node::new(w)).collect();
    let e = |a, b, l| Edge::new(a, b, l, 1.0, upper);
    let edges = vec![
        e(L, M, 3.0),
        e(I, L, 2.5),
        e(I, M, 2.5),
        e(I, X1, 2.75),
        e(L, X1, 1.5),
        e(I, X2, 2.75),
        e(M, X2, 1.5),
    ];
    Network::new(nodes, edges).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_facilities(rng: &mut ChaCha8Rng, n: usize, p: usize) -> FacilitySet {
    FacilitySet::new(sample(rng, n, p), n).unwrap()
}

/// Budget as a fraction of the cost of downgrading every edge fully.
pub fn budget_fraction(inst: &Instance, frac: f64) -> Instance {
    inst.with_budget(round2(inst.network.max_budget() * frac)).unwrap()
}

/// Connected sparse network: a random tree plus extra edges.
pub fn sparse(seed: u64, n: usize, p: usize) -> Instance {
    let mut r = rng(seed);
    let nodes = (0..n).map(|_| Node::new(r.random_range(1..=100))).collect();
    let mut edges: Vec<Edge> = Vec::new();
    let add = |a: usize, b: usize, r: &mut ChaCha8Rng, edges: &mut Vec<Edge>| {
        if a == b || edges.iter().any(|e| (e.a, e.b) == (a.min(b), a.max(b))) {
            return;
        }
        let l = round2(r.random_range(1.0..10.0));
        let c = round2(r.random_range(1.0..3.0));
        let u = round2(r.random_range(0.0..8.0));
        edges.push(Edge::new(a, b, l, c, u));
    };
    for v in 1..n {
        let w = r.random_range(0..v);
        add(v, w, &mut r, &mut edges);
    }
    for _ in 0..n {
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        add(a, b, &mut r, &mut edges);
    }
    let net = Network::new(nodes, edges).unwrap();
    let k = r.random_range(1..=3usize.min(n - 1));
    let radius = radius_for(&net, k).unwrap();
    let frac = [0.02, 0.05, 0.1, 0.2][r.random_range(0..4)];
    let inst = Instance::new(net, p, radius, 0.0).unwrap();
    budget_fraction(&inst, frac)
}

/// Generated complete-graph instance with an explicit facility count and a
/// budget set as a fraction of the preprocessed maximum.
pub fn generated(seed: u64, n: usize, p: usize) -> Instance {
    let modes = [RadiusMode::AtLeastOne, RadiusMode::AtLeast5Pct, RadiusMode::AtLeast10Pct];
    let cfg = GenConfig {
        n,
        p_mode: PMode::Fixed(p),
        radius_mode: modes[(seed % 3) as usize],
        b_per: 0.0,
        seed,
    };
    let raw = generate(&cfg).unwrap();
    let reduced = preprocess(&raw).unwrap();
    let frac = [0.02, 0.05, 0.1, 0.2][((seed / 3) % 4) as usize];
    raw.with_budget(round2(reduced.network.max_budget() * frac)).unwrap()
}

/// Alternates generated and sparse instances with n in {6, 8, 10} and
/// p in {1, 2}, before preprocessing.
pub fn mixed_suite(count: usize, base_seed: u64) -> Vec<Instance> {
    (0..count as u64)
        .map(|k| {
            let seed = base_seed + k;
            let n = [6, 8, 10][(k % 3) as usize];
            let p = 1 + ((k / 3) % 2) as usize;
            if k % 2 == 0 {
                generated(seed, n, p)
            } else {
                sparse(seed, n, p)
            }
        })
        .collect()
}
