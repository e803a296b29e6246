//! Matheuristic for the downgrading MCLP.
//!
//! A construction phase runs the alternating location-downgrading search
//! from several starting facility sets; an optional 1-1 local search then
//! tries to improve the best one. Every facility set is scored by solving
//! the attacker's problem, and scores are cached in an [`Evaluator`].

mod alternating;
mod local_search;
mod strategies;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::attacker::solve_attacker;
use crate::error::{Error, Result};
use crate::graph::{coverage, covered_after, Downgrade, FacilitySet};
use crate::instance::Instance;
use crate::solver::{SolverError, Status};

pub use alternating::alternating_search;
pub use local_search::{ls_fixed_out_in, ls_fixed_out_opt_in, ls_optimal_out_in};
pub use strategies::{starting_gamma, starting_set, STRATEGY_COUNT};

/// Attacker time limit used by the `_tl` variants.
pub const DEFAULT_TL: Duration = Duration::from_secs(10);

/// Which network scores the swap candidates in the fixed local searches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Version {
    /// The current downgraded network `N(gamma)`.
    A,
    /// The fully downgraded network `N(u)`.
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LocalSearch {
    FixedOutIn(Version),
    FixedOutOptIn(Version),
    OptimalOutIn,
}

impl LocalSearch {
    fn default_iters(self) -> usize {
        match self {
            LocalSearch::OptimalOutIn => 10,
            _ => 50,
        }
    }
}

impl fmt::Display for LocalSearch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = |v: &Version| if *v == Version::A { "a" } else { "b" };
        match self {
            LocalSearch::FixedOutIn(x) => write!(f, "FixedOutIn_{}", v(x)),
            LocalSearch::FixedOutOptIn(x) => write!(f, "FixedOutOptIn_{}", v(x)),
            LocalSearch::OptimalOutIn => f.write_str("OptimalOutIn"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeuristicConfig {
    /// Starting strategy codes, each in `0..=8`.
    pub strategies: Vec<u8>,
    pub max_alt_iters: usize,
    pub local_search: Option<LocalSearch>,
    pub ls_max_iters: usize,
    /// Time limit for candidate attacker solves in the optimal local
    /// searches. Chosen sets are always re-solved without a limit.
    pub attacker_time_limit: Option<Duration>,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            strategies: (0..STRATEGY_COUNT).collect(),
            max_alt_iters: 30,
            local_search: None,
            ls_max_iters: 1,
            attacker_time_limit: None,
        }
    }
}

impl HeuristicConfig {
    pub fn with_local_search(ls: LocalSearch) -> Self {
        HeuristicConfig {
            local_search: Some(ls),
            ls_max_iters: ls.default_iters(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::invalid("at least one starting strategy is required"));
        }
        if let Some(s) = self.strategies.iter().find(|&&s| s >= STRATEGY_COUNT) {
            return Err(Error::invalid(format!("unknown starting strategy {s}")));
        }
        if self.max_alt_iters == 0 || self.ls_max_iters == 0 {
            return Err(Error::invalid("iteration counts must be at least 1"));
        }
        Ok(())
    }

    /// Method name as used by the CLI and the benchmark files.
    pub fn name(&self) -> String {
        let mut s = match self.local_search {
            None => "alternating".to_string(),
            Some(LocalSearch::OptimalOutIn) => format!("OptimalOutIn_{}", self.ls_max_iters),
            Some(ls) => ls.to_string(),
        };
        if self.attacker_time_limit.is_some() {
            s.push_str("_tl");
        }
        s
    }
}

/// Parses `alternating`, `FixedOutIn_a`, `FixedOutIn_b`, `FixedOutOptIn_a`,
/// `FixedOutOptIn_b`, `OptimalOutIn` or `OptimalOutIn_<iters>`, optionally
/// followed by `_tl` for a 10 s attacker time limit on candidate solves.
impl FromStr for HeuristicConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (base, tl) = match s.strip_suffix("_tl") {
            Some(b) => (b, true),
            None => (s, false),
        };
        let mut cfg = match base {
            "alternating" => HeuristicConfig::default(),
            "FixedOutIn_a" => Self::with_local_search(LocalSearch::FixedOutIn(Version::A)),
            "FixedOutIn_b" => Self::with_local_search(LocalSearch::FixedOutIn(Version::B)),
            "FixedOutOptIn_a" => Self::with_local_search(LocalSearch::FixedOutOptIn(Version::A)),
            "FixedOutOptIn_b" => Self::with_local_search(LocalSearch::FixedOutOptIn(Version::B)),
            "OptimalOutIn" => Self::with_local_search(LocalSearch::OptimalOutIn),
            other => {
                let iters = other
                    .strip_prefix("OptimalOutIn_")
                    .and_then(|k| k.parse::<usize>().ok())
                    .filter(|&k| k > 0)
                    .ok_or_else(|| Error::invalid(format!("unknown heuristic variant '{s}'")))?;
                let mut c = Self::with_local_search(LocalSearch::OptimalOutIn);
                c.ls_max_iters = iters;
                c
            }
        };
        if tl {
            if matches!(cfg.local_search, None | Some(LocalSearch::FixedOutIn(_))) {
                return Err(Error::invalid(format!("variant '{base}' has no time-limited form")));
            }
            cfg.attacker_time_limit = Some(DEFAULT_TL);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Trace {
    /// Starting strategy of the best construction, if any.
    pub strategy: Option<u8>,
    pub alt_iterations: usize,
    pub ls_iterations: usize,
    /// Accepted local-search moves.
    pub ls_moves: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub facilities: FacilitySet,
    pub gamma: Downgrade,
    /// Demand still covered after the attack.
    pub value: u64,
    pub trace: Trace,
}

/// Post-attack score of one facility set.
#[derive(Debug, Clone, PartialEq)]
pub struct Eval {
    pub value: u64,
    pub gamma: Downgrade,
    /// False when the attacker solve hit its time limit; `value` is then an
    /// overestimate.
    pub exact: bool,
}

/// Scores facility sets with attacker solves, caching the results. Safe to
/// share across threads; solves run outside the lock.
pub struct Evaluator<'a> {
    inst: &'a Instance,
    cache: Mutex<HashMap<FacilitySet, Eval>>,
    solves: AtomicUsize,
    solve_nanos: AtomicU64,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a Instance) -> Self {
        Evaluator {
            inst,
            cache: Mutex::new(HashMap::new()),
            solves: AtomicUsize::new(0),
            solve_nanos: AtomicU64::new(0),
        }
    }

    pub fn instance(&self) -> &'a Instance {
        self.inst
    }

    /// Number of attacker solves performed so far.
    pub fn attacker_solves(&self) -> usize {
        self.solves.load(Ordering::Relaxed)
    }

    /// Summed wall time of the attacker solves, in seconds.
    pub fn solver_seconds(&self) -> f64 {
        self.solve_nanos.load(Ordering::Relaxed) as f64 * 1e-9
    }

    /// Exact score of `x`.
    pub fn exact(&self, x: &FacilitySet) -> Result<Eval> {
        self.evaluate(x, None)
    }

    /// Score of `x`, possibly from a time-limited solve when `limit` is set.
    pub fn evaluate(&self, x: &FacilitySet, limit: Option<Duration>) -> Result<Eval> {
        if let Some(e) = self.lookup(x) {
            if e.exact || limit.is_some() {
                return Ok(e);
            }
        }
        let inst = self.inst;
        self.solves.fetch_add(1, Ordering::Relaxed);
        let start = Instant::now();
        let res = solve_attacker(inst, x, limit);
        let nanos = start.elapsed().as_nanos().min(u64::MAX as u128) as u64;
        self.solve_nanos.fetch_add(nanos, Ordering::Relaxed);
        let res = res?;
        let before = coverage(&inst.network, &inst.zero_downgrade(), x, inst.radius)?.demand;
        let value = before - res.objective;
        let exact = res.status == Status::Optimal;
        if exact {
            let after = covered_after(&inst.network, x, &res.gamma, inst.radius)?;
            if after != value {
                return Err(Error::Solver(SolverError::Backend(format!(
                    "attacker response for {x} leaves {after} covered, expected {value}"
                ))));
            }
        }
        let eval = Eval {
            value,
            gamma: res.gamma,
            exact,
        };
        let mut cache = self.cache.lock().expect("cache lock");
        match cache.get(x) {
            Some(old) if old.exact => Ok(old.clone()),
            _ => {
                cache.insert(x.clone(), eval.clone());
                Ok(eval)
            }
        }
    }

    /// Scores all sets, in parallel, preserving order.
    pub fn evaluate_all(&self, sets: &[FacilitySet], limit: Option<Duration>) -> Result<Vec<Eval>> {
        sets.par_iter().map(|x| self.evaluate(x, limit)).collect()
    }

    fn lookup(&self, x: &FacilitySet) -> Option<Eval> {
        self.cache.lock().expect("cache lock").get(x).cloned()
    }
}

/// Applies the configured local search to `sol`.
pub fn local_search(ev: &Evaluator, sol: Solution, cfg: &HeuristicConfig) -> Result<Solution> {
    match cfg.local_search {
        None => Ok(sol),
        Some(LocalSearch::FixedOutIn(v)) => ls_fixed_out_in(ev, sol, v, cfg.ls_max_iters),
        Some(LocalSearch::FixedOutOptIn(v)) => {
            ls_fixed_out_opt_in(ev, sol, v, cfg.ls_max_iters, cfg.attacker_time_limit)
        }
        Some(LocalSearch::OptimalOutIn) => ls_optimal_out_in(ev, sol, cfg.ls_max_iters, cfg.attacker_time_limit),
    }
}

/// Best alternating search over the configured starting strategies,
/// followed by the configured local search. The reported downgrade comes
/// from a fresh exact attacker solve.
pub fn run_matheuristic(inst: &Instance, cfg: &HeuristicConfig) -> Result<Solution> {
    cfg.validate()?;
    let ev = Evaluator::new(inst);
    construct_and_improve(&ev, cfg)
}

/// [`run_matheuristic`] with a caller-provided evaluator, so several
/// configurations can share cached attacker solves.
pub fn construct_and_improve(ev: &Evaluator, cfg: &HeuristicConfig) -> Result<Solution> {
    cfg.validate()?;
    let inst = ev.instance();
    let runs: Vec<Solution> = cfg
        .strategies
        .par_iter()
        .map(|&code| {
            let x0 = starting_set(inst, code)?;
            let mut sol = alternating_search(ev, &x0, cfg.max_alt_iters)?;
            sol.trace.strategy = Some(code);
            Ok(sol)
        })
        .collect::<Result<_>>()?;
    let mut best = runs[0].clone();
    for r in &runs[1..] {
        if r.value > best.value {
            best = r.clone();
        }
    }
    let sol = local_search(ev, best, cfg)?;

    let check = solve_attacker(inst, &sol.facilities, None)?;
    let after = covered_after(&inst.network, &sol.facilities, &check.gamma, inst.radius)?;
    if after != sol.value {
        return Err(Error::Solver(SolverError::Backend(format!(
            "final check for {} gives {after}, expected {}",
            sol.facilities, sol.value
        ))));
    }
    Ok(Solution { gamma: check.gamma, ..sol })
}
