//! Instances, the random generator and the text file format.
//!
//! File layout (whitespace separated, `#` starts a comment):
//!
//! ```text
//! n m p R B
//! id w [x y]        # n node lines
//! i j l u c         # m edge lines: endpoints, length, upper bound, cost rate
//! ```
//!
//! All decimals are written with two decimals and quantized to two decimals
//! when read.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{all_pairs_distances, Downgrade, Edge, Network, Node};
use crate::round2;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub network: Network,
    pub p: usize,
    pub radius: f64,
    pub budget: f64,
}

impl Instance {
    pub fn new(network: Network, p: usize, radius: f64, budget: f64) -> Result<Self> {
        if p == 0 || p > network.node_count() {
            return Err(Error::invalid(format!(
                "p = {p} must lie in 1..={}",
                network.node_count()
            )));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("radius {radius} must be positive")));
        }
        if !(budget >= 0.0) || !budget.is_finite() {
            return Err(Error::invalid(format!("budget {budget} must be non-negative")));
        }
        Ok(Instance {
            network,
            p,
            radius,
            budget,
        })
    }

    pub fn n(&self) -> usize {
        self.network.node_count()
    }

    pub fn m(&self) -> usize {
        self.network.edge_count()
    }

    pub fn with_budget(&self, budget: f64) -> Result<Self> {
        Instance::new(self.network.clone(), self.p, self.radius, budget)
    }

    pub fn with_p(&self, p: usize) -> Result<Self> {
        Instance::new(self.network.clone(), p, self.radius, self.budget)
    }

    pub fn zero_downgrade(&self) -> Downgrade {
        Downgrade::zero(self.m())
    }

    pub fn full_downgrade(&self) -> Downgrade {
        Downgrade::full(&self.network)
    }

    /// Serializes to the text format.
    pub fn to_text(&self) -> String {
        let net = &self.network;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} {} {} {:.2} {:.2}",
            self.n(),
            self.m(),
            self.p,
            self.radius,
            self.budget
        );
        for (id, node) in net.nodes().iter().enumerate() {
            match node.coords {
                Some((x, y)) => {
                    let _ = writeln!(s, "{id} {} {x:.2} {y:.2}", node.weight);
                }
                None => {
                    let _ = writeln!(s, "{id} {}", node.weight);
                }
            }
        }
        for e in net.edges() {
            let _ = writeln!(
                s,
                "{} {} {:.2} {:.2} {:.2}",
                e.a, e.b, e.length, e.upper, e.cost_rate
            );
        }
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Parses the text format; every error carries its 1-based line number.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());

        let eof = |what: &str| Error::Parse {
            line: text.lines().count().max(1),
            msg: format!("unexpected end of file, expected {what}"),
        };

        let (hline, header) = lines.next().ok_or_else(|| eof("header"))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 5 {
            return Err(parse_err(hline, "header must be `n m p R B`"));
        }
        let n: usize = num(hline, tok[0], "n")?;
        let m: usize = num(hline, tok[1], "m")?;
        let p: usize = num(hline, tok[2], "p")?;
        let radius = round2(num::<f64>(hline, tok[3], "R")?);
        let budget = round2(num::<f64>(hline, tok[4], "B")?);

        let mut nodes: Vec<Option<Node>> = vec![None; n];
        for _ in 0..n {
            let (line, l) = lines.next().ok_or_else(|| eof("node line"))?;
            let tok: Vec<&str> = l.split_whitespace().collect();
            if tok.len() != 2 && tok.len() != 4 {
                return Err(parse_err(line, "node line must be `id w [x y]`"));
            }
            let id: usize = num(line, tok[0], "node id")?;
            let w: u64 = num(line, tok[1], "weight")?;
            if id >= n {
                return Err(parse_err(line, format!("node id {id} outside 0..{n}")));
            }
            if nodes[id].is_some() {
                return Err(parse_err(line, format!("duplicate node id {id}")));
            }
            nodes[id] = Some(if tok.len() == 4 {
                let x = round2(num::<f64>(line, tok[2], "x")?);
                let y = round2(num::<f64>(line, tok[3], "y")?);
                Node::with_coords(w, x, y)
            } else {
                Node::new(w)
            });
        }
        // n distinct ids in 0..n are necessarily a permutation.
        let nodes: Vec<Node> = nodes.into_iter().map(|n| n.expect("filled")).collect();

        let mut edges = Vec::with_capacity(m);
        let mut seen = HashSet::new();
        for _ in 0..m {
            let (line, l) = lines.next().ok_or_else(|| eof("edge line"))?;
            let tok: Vec<&str> = l.split_whitespace().collect();
            if tok.len() != 5 {
                return Err(parse_err(line, "edge line must be `i j l u c`"));
            }
            let i: usize = num(line, tok[0], "endpoint")?;
            let j: usize = num(line, tok[1], "endpoint")?;
            let len = round2(num::<f64>(line, tok[2], "length")?);
            let upper = round2(num::<f64>(line, tok[3], "upper bound")?);
            let cost = round2(num::<f64>(line, tok[4], "cost rate")?);
            if i >= n || j >= n {
                return Err(parse_err(line, format!("endpoint outside 0..{n}")));
            }
            if i == j {
                return Err(parse_err(line, "self-loop"));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(parse_err(line, format!("duplicate edge [{i},{j}]")));
            }
            if !(len > 0.0) {
                return Err(parse_err(line, "length must be positive"));
            }
            if !(upper >= 0.0) {
                return Err(parse_err(line, "upper bound must be non-negative"));
            }
            if !(cost > 0.0) {
                return Err(parse_err(line, "cost rate must be positive"));
            }
            edges.push(Edge::new(i, j, len, cost, upper));
        }
        if let Some((line, _)) = lines.next() {
            return Err(parse_err(line, "trailing data after the last edge"));
        }
        let network = Network::new(nodes, edges).map_err(|e| parse_err(hline, e.to_string()))?;
        Instance::new(network, p, radius, budget).map_err(|e| parse_err(hline, e.to_string()))
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn num<T: FromStr>(line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("cannot parse {what} from `{tok}`")))
}

/// Number of facilities as a fraction of the node count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PMode {
    #[serde(rename = "n/30")]
    N30,
    #[serde(rename = "n/20")]
    N20,
    #[serde(rename = "n/10")]
    N10,
    /// Explicit facility count, for instances too small for the ratios.
    #[serde(untagged)]
    Fixed(usize),
}

impl PMode {
    /// `floor(n / k)`, at least 1 and at most `n`.
    pub fn facilities(self, n: usize) -> usize {
        let p = match self {
            PMode::N30 => n / 30,
            PMode::N20 => n / 20,
            PMode::N10 => n / 10,
            PMode::Fixed(p) => p,
        };
        p.clamp(1, n.max(1))
    }
}

impl FromStr for PMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n/30" => Ok(PMode::N30),
            "n/20" => Ok(PMode::N20),
            "n/10" => Ok(PMode::N10),
            _ => s
                .parse()
                .map(PMode::Fixed)
                .map_err(|_| Error::invalid(format!("unknown p mode `{s}`"))),
        }
    }
}

impl std::fmt::Display for PMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PMode::N30 => f.write_str("n/30"),
            PMode::N20 => f.write_str("n/20"),
            PMode::N10 => f.write_str("n/10"),
            PMode::Fixed(p) => write!(f, "{p}"),
        }
    }
}

/// How many other nodes every node must be able to cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMode {
    AtLeastOne,
    #[serde(rename = "at_least_5pct")]
    AtLeast5Pct,
    #[serde(rename = "at_least_10pct")]
    AtLeast10Pct,
}

impl RadiusMode {
    /// `k` in "every node covers at least `k` other nodes".
    pub fn neighbors(self, n: usize) -> usize {
        let k = match self {
            RadiusMode::AtLeastOne => 1,
            RadiusMode::AtLeast5Pct => (0.05 * n as f64).ceil() as usize,
            RadiusMode::AtLeast10Pct => (0.1 * n as f64).ceil() as usize,
        };
        k.clamp(1, n.saturating_sub(1).max(1))
    }
}

impl FromStr for RadiusMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "at_least_one" => Ok(RadiusMode::AtLeastOne),
            "at_least_5pct" => Ok(RadiusMode::AtLeast5Pct),
            "at_least_10pct" => Ok(RadiusMode::AtLeast10Pct),
            _ => Err(Error::invalid(format!("unknown radius mode `{s}`"))),
        }
    }
}

impl std::fmt::Display for RadiusMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RadiusMode::AtLeastOne => "at_least_one",
            RadiusMode::AtLeast5Pct => "at_least_5pct",
            RadiusMode::AtLeast10Pct => "at_least_10pct",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub p_mode: PMode,
    pub radius_mode: RadiusMode,
    pub b_per: f64,
    pub seed: u64,
}

/// `B = B_max * B_per * p (p - 1) / (n (n - 1))`, rounded to two decimals.
pub fn budget_formula(b_max: f64, b_per: f64, p: usize, n: usize) -> f64 {
    let (p, n) = (p as f64, n as f64);
    round2(b_max * b_per * p * (p - 1.0) / (n * (n - 1.0)))
}

/// Uniform draw in the open interval (0, 1) from the top 53 bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Generates a complete graph on `n` uniform points in `[0,30]^2`.
///
/// The stream is `ChaCha8Rng::seed_from_u64(seed)`, consumed in this order:
/// coordinates (x then y, node by node), weights, cost rates, upper bounds.
/// Edges are enumerated as `(i, j)` with `i < j` in lexicographic order.
/// Every draw maps one `u64` to `u in (0,1)` via its top 53 bits:
/// coordinate `30u`, weight `1 + floor(100u)`, cost `1 + 2u`, upper bound
/// `l (0.5 + u)`, all rounded to two decimals.
pub fn generate(config: &GenConfig) -> Result<Instance> {
    let n = config.n;
    if n < 3 {
        return Err(Error::invalid(format!("n = {n} is too small, need n >= 3")));
    }
    if !(config.b_per >= 0.0) || !config.b_per.is_finite() {
        return Err(Error::invalid("b_per must be non-negative"));
    }
    let p = config.p_mode.facilities(n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let coords: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let x = round2(30.0 * unit(&mut rng));
            let y = round2(30.0 * unit(&mut rng));
            (x, y)
        })
        .collect();
    let weights: Vec<u64> = (0..n)
        .map(|_| 1 + ((100.0 * unit(&mut rng)) as u64).min(99))
        .collect();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let costs: Vec<f64> = pairs
        .iter()
        .map(|_| round2(1.0 + 2.0 * unit(&mut rng)))
        .collect();
    let lengths: Vec<f64> = pairs
        .iter()
        .map(|&(i, j)| {
            let (dx, dy) = (coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
            // Coincident points would give a zero length; keep the smallest
            // representable positive length instead.
            round2(dx.hypot(dy)).max(0.01)
        })
        .collect();
    let uppers: Vec<f64> = lengths
        .iter()
        .map(|&l| round2(l * (0.5 + unit(&mut rng))))
        .collect();

    let nodes = coords
        .iter()
        .zip(&weights)
        .map(|(&(x, y), &w)| Node::with_coords(w, x, y))
        .collect();
    let edges = pairs
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| Edge::new(i, j, lengths[k], costs[k], uppers[k]))
        .collect();
    let network = Network::new(nodes, edges)?;

    let radius = radius_for(&network, config.radius_mode.neighbors(n))?;
    let budget = budget_formula(network.max_budget(), config.b_per, p, n);
    Instance::new(network, p, radius, budget)
}

/// `max_i (k-th smallest d(i, j), j != i) + 0.01`, so that under strict
/// coverage every node covers at least `k` other nodes.
pub fn radius_for(net: &Network, k: usize) -> Result<f64> {
    let dist = all_pairs_distances(net, &Downgrade::zero(net.edge_count()))?;
    let mut worst: f64 = 0.0;
    for (i, row) in dist.iter().enumerate() {
        let mut others: Vec<f64> = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &d)| d)
            .collect();
        others.sort_by(f64::total_cmp);
        let kth = others
            .get(k.saturating_sub(1))
            .copied()
            .ok_or_else(|| Error::invalid(format!("node {i} has fewer than {k} other nodes")))?;
        worst = worst.max(kth);
    }
    if !worst.is_finite() {
        return Err(Error::invalid("network is disconnected; radius undefined"));
    }
    Ok(round2(worst + 0.01))
}
