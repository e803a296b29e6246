//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use dmclp::attacker::{big_m, build_attacker_model_reduced, solve_attacker, solve_attacker_full, AttackerResult};
use dmclp::bench::{bench, SweepConfig};
use dmclp::graph::{coverage, shortest_distances, uncovered_after};
use dmclp::heuristic::{construct_and_improve, Evaluator, HeuristicConfig};
use dmclp::instance::{generate, GenConfig, PMode, RadiusMode};
use dmclp::metrics::{bounds, managerial_insight_with};
use dmclp::oracles::{attacker_oracle_star, attacker_oracle_subsets, solve_exact_enum, star_from_knapsack, AttackerMode};
use dmclp::preprocess::preprocess;
use dmclp::{Downgrade, FacilitySet, Instance};
use rand::Rng;

const VARIANTS: [&str; 7] = [
    "alternating",
    "FixedOutIn_a",
    "FixedOutIn_b",
    "FixedOutOptIn_a",
    "FixedOutOptIn_b",
    "OptimalOutIn_1",
    "OptimalOutIn_10",
];

/// Largest `pi_k - M_k` seen over all optimal attacker solves.
#[derive(Default)]
struct BigMCheck {
    solves: usize,
    worst: f64,
}

impl BigMCheck {
    fn record(&mut self, inst: &Instance, res: &AttackerResult) {
        if !res.is_optimal() {
            return;
        }
        let m = big_m(&inst.network, inst.p).unwrap();
        self.solves += 1;
        for &(k, pi) in &res.potentials {
            self.worst = self.worst.max(pi - m[k]);
        }
    }
}

type Verdict = Result<String, String>;

fn check(cond: bool, ok: String, fail: String) -> Verdict {
    if cond {
        Ok(ok)
    } else {
        Err(fail)
    }
}

fn c1_three_way(bm: &mut BigMCheck) -> Verdict {
    let suite = mixed_suite(210, 1_000);
    let mut rng = rng(77);
    let mut mismatches = Vec::new();
    let mut positive = 0;
    for (k, raw) in suite.iter().enumerate() {
        let inst = preprocess(raw).unwrap();
        let x = random_facilities(&mut rng, inst.n(), inst.p);
        let reduced = solve_attacker(&inst, &x, None).unwrap();
        let full = solve_attacker_full(&inst, &x).unwrap();
        let subsets = attacker_oracle_subsets(&inst, &x).unwrap();
        bm.record(&inst, &reduced);
        let q = (reduced.objective, full.objective, subsets.objective);
        positive += usize::from(q.0 > 0);
        if q.0 != q.1 || q.0 != q.2 {
            mismatches.push(format!("#{k} {x}: {q:?}"));
        }
    }
    check(
        mismatches.is_empty(),
        format!("{} instances ({positive} with Q > 0), reduced = full = subsets", suite.len()),
        format!("{} mismatches: {}", mismatches.len(), mismatches.join("; ")),
    )
}

fn brute_knapsack(g: &[u64], b: &[u64], cap: u64) -> u64 {
    (0u32..1 << g.len())
        .filter_map(|mask| {
            let take = |k: usize| mask & (1 << k) != 0;
            let w: u64 = (0..g.len()).filter(|&k| take(k)).map(|k| g[k]).sum();
            (w <= cap).then(|| (0..g.len()).filter(|&k| take(k)).map(|k| b[k]).sum())
        })
        .max()
        .unwrap()
}

fn c2_star(bm: &mut BigMCheck) -> Verdict {
    let inst = star_from_knapsack(&[2, 3, 4], &[5, 6, 10], 5, 22).unwrap();
    let x = FacilitySet::new([0], 4).unwrap();
    let worked = solve_attacker(&inst, &x, None).unwrap();
    bm.record(&inst, &worked);
    if worked.objective != 11 || attacker_oracle_star(&inst, &x).unwrap().objective != 11 {
        return Err(format!("worked example gives Q = {}", worked.objective));
    }
    let mut r = rng(4242);
    let mut bad = Vec::new();
    let count = 120;
    for k in 0..count {
        let items = r.random_range(1..=15);
        let cap = r.random_range(1..=40u64);
        let g: Vec<u64> = (0..items).map(|_| r.random_range(1..=cap)).collect();
        let b: Vec<u64> = (0..items).map(|_| r.random_range(1..=50)).collect();
        let w = b.iter().sum::<u64>() + 1;
        let inst = star_from_knapsack(&g, &b, cap, w).unwrap();
        let x = FacilitySet::new([0], items + 1).unwrap();
        let milp = solve_attacker(&inst, &x, None).unwrap();
        bm.record(&inst, &milp);
        let dp = attacker_oracle_star(&inst, &x).unwrap().objective;
        let brute = brute_knapsack(&g, &b, cap);
        if milp.objective != dp || dp != brute {
            bad.push(format!("#{k}: milp {} dp {dp} brute {brute}", milp.objective));
        }
    }
    check(
        bad.is_empty(),
        format!("{count} reductions plus the worked example (Q = 11) agree"),
        bad.join("; "),
    )
}

/// Per-instance results shared by criteria 3, 4, 7 and 8.
struct SuiteRow {
    exact: u64,
    lb: u64,
    ub: u64,
    heur: BTreeMap<&'static str, u64>,
    mi: (f64, f64),
}

fn run_suite(bm: &mut BigMCheck) -> (Vec<SuiteRow>, Vec<String>) {
    let suite = mixed_suite(100, 2_000);
    let mut rows = Vec::new();
    let mut pre_mismatch = Vec::new();
    for (k, raw) in suite.iter().enumerate() {
        let inst = preprocess(raw).unwrap();
        let orig = solve_exact_enum(raw, AttackerMode::Milp).unwrap();
        let exact = solve_exact_enum(&inst, AttackerMode::Milp).unwrap();
        if orig.value != exact.value {
            pre_mismatch.push(format!("#{k}: {} vs {}", orig.value, exact.value));
        }
        for (x, _) in &exact.table {
            bm.record(&inst, &solve_attacker(&inst, x, None).unwrap());
        }
        let b = bounds(&inst).unwrap();
        let ev = Evaluator::new(&inst);
        let heur = VARIANTS
            .iter()
            .map(|&name| {
                let cfg: HeuristicConfig = name.parse().unwrap();
                (name, construct_and_improve(&ev, &cfg).unwrap().value)
            })
            .collect();
        let mi = managerial_insight_with(&inst, &b, exact.value).unwrap();
        rows.push(SuiteRow {
            exact: exact.value,
            lb: b.lb,
            ub: b.ub,
            heur,
            mi: (mi.mi_o, mi.mi_p),
        });
    }
    (rows, pre_mismatch)
}

fn c3_preprocess(rows: &[SuiteRow], mismatch: &[String]) -> Verdict {
    let attacked = rows.iter().filter(|r| r.exact < r.ub).count();
    check(
        mismatch.is_empty(),
        format!("{} instances ({attacked} where the attack lowers the optimum), original = preprocessed", rows.len()),
        mismatch.join("; "),
    )
}

fn c4_sandwich(rows: &[SuiteRow]) -> Verdict {
    let mut bad = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        if !(r.lb <= r.exact && r.exact <= r.ub) {
            bad.push(format!("#{k}: lb {} exact {} ub {}", r.lb, r.exact, r.ub));
        }
        for (name, &v) in &r.heur {
            if !(r.lb <= v && v <= r.exact) {
                bad.push(format!("#{k} {name}: lb {} value {v} exact {}", r.lb, r.exact));
            }
        }
        if r.mi.0 > 0.0 || r.mi.1 > 0.0 {
            bad.push(format!("#{k}: mi_o {} mi_p {}", r.mi.0, r.mi.1));
        }
    }
    check(
        bad.is_empty(),
        format!("{} instances x {} variants, LB <= h <= exact <= UB, MI <= 0", rows.len(), VARIANTS.len()),
        bad.join("; "),
    )
}

fn c5_big_m(bm: &BigMCheck) -> Verdict {
    check(
        bm.worst <= 1e-6,
        format!("{} optimal solves, max(pi - M) = {:.2e}", bm.solves, bm.worst),
        format!("pi exceeds M by {:.3e}", bm.worst),
    )
}

fn c6_monotone() -> Verdict {
    let mut r = rng(606);
    let mut bad = Vec::new();
    for k in 0..20u64 {
        let n = [6, 8, 10][(k % 3) as usize];
        let raw = if k % 2 == 0 { generated(3_000 + k, n, 2) } else { sparse(3_000 + k, n, 2) };
        let inst = preprocess(&raw).unwrap();
        let x = random_facilities(&mut r, inst.n(), inst.p);
        let b = inst.budget;
        let budgets = [0.0, b / 2.0, b, 2.0 * b, inst.network.max_budget()];
        let qs: Vec<u64> = budgets
            .iter()
            .map(|&bb| solve_attacker(&inst.with_budget(bb).unwrap(), &x, None).unwrap().objective)
            .collect();
        if qs[0] != 0 || qs.windows(2).any(|w| w[0] > w[1]) {
            bad.push(format!("#{k}: {qs:?}"));
        }
    }
    check(bad.is_empty(), "20 instances, Q nondecreasing in B, Q(0) = 0".into(), bad.join("; "))
}

fn c7_quality(rows: &[SuiteRow]) -> Verdict {
    let alt_hits = rows.iter().filter(|r| r.heur["alternating"] == r.exact).count();
    let hits = rows.iter().filter(|r| r.heur["OptimalOutIn_10"] == r.exact).count();
    let over = rows.iter().filter(|r| r.heur["OptimalOutIn_10"] > r.exact).count();
    let share = hits as f64 / rows.len() as f64;
    check(
        share >= 0.8 && over == 0,
        format!(
            "OptimalOutIn_10 optimal on {hits}/{} ({:.0}%), construction alone on {alt_hits}",
            rows.len(),
            share * 100.0
        ),
        format!("optimal on {hits}/{}, above exact on {over}", rows.len()),
    )
}

fn c8_ordering(rows: &[SuiteRow]) -> Verdict {
    let mean = |name: &str| rows.iter().map(|r| r.heur[name] as f64).sum::<f64>() / rows.len() as f64;
    let means: Vec<(&str, f64)> = VARIANTS.iter().map(|&v| (v, mean(v))).collect();
    let (ooi, fooi_a, fooi_b, foi_a, foi_b) = (
        mean("OptimalOutIn_10"),
        mean("FixedOutOptIn_a"),
        mean("FixedOutOptIn_b"),
        mean("FixedOutIn_a"),
        mean("FixedOutIn_b"),
    );
    let ok = ooi >= fooi_a.max(fooi_b) && fooi_a >= foi_a && fooi_b >= foi_b;
    let text = means.iter().map(|(v, m)| format!("{v} {m:.2}")).collect::<Vec<_>>().join(", ");
    check(ok, format!("{} instances: {text}", rows.len()), format!("ordering violated: {text}"))
}

fn c9_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    for (k, n) in [8usize, 12, 30].into_iter().enumerate() {
        let cfg = GenConfig {
            n,
            p_mode: if n >= 30 { PMode::N10 } else { PMode::Fixed(2) },
            radius_mode: RadiusMode::AtLeast5Pct,
            b_per: 0.5,
            seed: 99 + k as u64,
        };
        let a = dir.path().join(format!("a{k}.txt"));
        let b = dir.path().join(format!("b{k}.txt"));
        generate(&cfg).unwrap().write(&a).unwrap();
        generate(&cfg).unwrap().write(&b).unwrap();
        if std::fs::read(&a).unwrap() != std::fs::read(&b).unwrap() {
            return Err(format!("instance files differ for n = {n}"));
        }
    }
    let sweep = SweepConfig::from_toml(
        r#"
n = [8]
p_modes = [2]
radius_modes = ["at_least_one", "at_least_10pct"]
b_per = [0.5]
seeds = [1, 2]
methods = ["exact", "FixedOutIn_a", "OptimalOutIn_1"]
"#,
    )
    .unwrap();
    let values = |rows: Vec<dmclp::bench::BenchRow>| {
        rows.into_iter()
            .map(|r| (r.instance, r.method, r.status, r.value, r.lb, r.ub, r.best_known, r.gap_bs, r.mi_o, r.mi_p))
            .collect::<Vec<_>>()
    };
    let first = values(bench(&sweep).unwrap());
    let second = values(bench(&sweep).unwrap());
    check(
        first == second,
        format!("3 instance files byte-identical, {} bench rows identical", first.len()),
        "benchmark value columns differ between runs".into(),
    )
}

fn c10_fig1() -> Verdict {
    let net = fig1([1, 1, 1, 1, 1], 3.0);
    let x1 = FacilitySet::new([X1], 5).unwrap();
    let d = shortest_distances(&net, &Downgrade::zero(7), &x1).unwrap();
    let mut fails = Vec::new();
    if (d.get(I), d.get(L), d.get(M)) != (2.75, 1.5, 4.5) {
        fails.push(format!("distances {:?}", d.as_slice()));
    }
    let cov = coverage(&net, &Downgrade::zero(7), &x1, 4.0).unwrap();
    if !(cov.contains(X1) && cov.contains(I) && cov.contains(L)) || cov.contains(M) {
        fails.push(format!("coverage {:?}", cov.nodes));
    }
    let mut g = vec![0.0; 7];
    g[net.edge_between(L, X1).unwrap()] = 2.5;
    let un = uncovered_after(&net, &x1, &Downgrade::new(&net, g).unwrap(), 4.0).unwrap();
    if un.nodes != vec![L] {
        fails.push(format!("un-covered {:?}", un.nodes));
    }
    let inst = Instance::new(net, 2, 4.0, 1.0).unwrap();
    let am = build_attacker_model_reduced(&inst, &FacilitySet::new([X1, X2], 5).unwrap()).unwrap();
    let lm = ["arc_1_2", "arc_2_1"];
    if lm.iter().any(|n| am.model.constraint(n).is_some()) {
        fails.push("arc [l,m] present".into());
    }
    if ["arc_0_1", "arc_1_3", "arc_0_2", "arc_2_4"].iter().any(|n| am.model.constraint(n).is_none()) {
        fails.push("an arc inside V^x1 or V^x2 is missing".into());
    }
    check(
        fails.is_empty(),
        "distances, strict coverage, un-covering and arc restriction hold".into(),
        fails.join("; "),
    )
}

fn run(id: u32, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = start.elapsed().as_secs_f64();
    let (tag, detail) = match &verdict {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    println!("criterion {id:>2} {tag} {name} ({secs:.1}s): {detail}");
    verdict.is_ok()
}

fn main() {
    let mut bm = BigMCheck::default();
    let mut ok = true;
    ok &= run(1, "attacker three-way agreement", || c1_three_way(&mut bm));
    ok &= run(2, "star/knapsack exactness", || c2_star(&mut bm));

    let start = Instant::now();
    let suite = catch_unwind(AssertUnwindSafe(|| run_suite(&mut bm)));
    println!("(exact suite built in {:.1}s)", start.elapsed().as_secs_f64());
    match &suite {
        Ok((rows, mismatch)) => {
            ok &= run(3, "preprocessing safety", || c3_preprocess(rows, mismatch));
            ok &= run(4, "bounds sandwich and dominance", || c4_sandwich(rows));
        }
        Err(_) => {
            for (id, name) in [(3, "preprocessing safety"), (4, "bounds sandwich and dominance")] {
                ok &= run(id, name, || Err("exact suite panicked".into()));
            }
        }
    }
    ok &= run(5, "big-M validity", || c5_big_m(&bm));
    ok &= run(6, "budget monotonicity", c6_monotone);
    match &suite {
        Ok((rows, _)) => {
            ok &= run(7, "matheuristic quality", || c7_quality(rows));
            ok &= run(8, "variant ordering", || c8_ordering(rows));
        }
        Err(_) => {
            ok &= run(7, "matheuristic quality", || Err("exact suite panicked".into()));
            ok &= run(8, "variant ordering", || Err("exact suite panicked".into()));
        }
    }
    ok &= run(9, "determinism", c9_determinism);
    ok &= run(10, "figure micro-checks", c10_fig1);
    if !ok {
        std::process::exit(1);
    }
}
