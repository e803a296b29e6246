//! `dmclp`: command line front end.
//!
//! Results are printed as JSON on stdout. Exit codes: 0 success, 2 input
//! error, 3 guard refusal, 1 any other failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use dmclp::attacker::solve_attacker;
use dmclp::bench::{bench, write_reports, SweepConfig};
use dmclp::graph::coverage;
use dmclp::heuristic::{run_matheuristic, HeuristicConfig};
use dmclp::instance::{generate, GenConfig, PMode, RadiusMode};
use dmclp::metrics::{bounds, gap_bs, managerial_insight_with};
use dmclp::oracles::{solve_exact_enum, AttackerMode};
use dmclp::preprocess::{preprocess_with_report, PreprocessReport};
use dmclp::{Downgrade, Error, FacilitySet, Instance};

#[derive(Parser)]
#[command(name = "dmclp", version, about = "Maximal covering location under edge downgrading")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random complete-graph instance.
    Generate {
        #[arg(long)]
        n: usize,
        /// `n/30`, `n/20`, `n/10` or an explicit count.
        #[arg(long, default_value = "n/10")]
        p_mode: PMode,
        /// `at_least_one`, `at_least_5pct` or `at_least_10pct`.
        #[arg(long, default_value = "at_least_one")]
        radius_mode: RadiusMode,
        #[arg(long, default_value_t = 0.5)]
        b_per: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove useless edges and tighten upper bounds.
    Preprocess {
        input: PathBuf,
        output: PathBuf,
    },
    /// Solve the attacker's problem for a fixed facility set.
    Attack {
        instance: PathBuf,
        /// Comma separated node ids.
        #[arg(long, value_delimiter = ',', required = true)]
        facilities: Vec<usize>,
        /// Seconds.
        #[arg(long)]
        time_limit: Option<f64>,
    },
    /// Run the matheuristic.
    Heuristic {
        instance: PathBuf,
        /// alternating, FixedOutIn_a|b, FixedOutOptIn_a|b, OptimalOutIn[_K],
        /// optionally with a `_tl` suffix.
        #[arg(long, default_value = "OptimalOutIn_10")]
        variant: String,
        /// Starting strategies, e.g. `0-8` or `0,1,4`.
        #[arg(long)]
        strategies: Option<String>,
        #[arg(long)]
        ls_iters: Option<usize>,
        /// Attacker time limit in seconds for candidate evaluations.
        #[arg(long)]
        time_limit: Option<f64>,
        #[arg(long)]
        alt_iters: Option<usize>,
    },
    /// Solve exactly by enumerating every facility set.
    Exact {
        instance: PathBuf,
        /// Use the subset-enumeration attacker instead of the MILP.
        #[arg(long)]
        oracle: bool,
    },
    /// Run a benchmark sweep described by a TOML file.
    Bench {
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Bounds and comparison metrics for a solution value.
    Metrics {
        instance: PathBuf,
        #[arg(long)]
        value: u64,
        /// Best known value for the gap, defaults to the upper bound.
        #[arg(long)]
        best_known: Option<u64>,
    },
}

fn seconds(s: Option<f64>) -> Result<Option<Duration>, Error> {
    s.map(|v| {
        Duration::try_from_secs_f64(v).map_err(|_| Error::InvalidInput(format!("bad time limit {v}")))
    })
    .transpose()
}

fn parse_strategies(spec: &str) -> Result<Vec<u8>, Error> {
    let bad = || Error::InvalidInput(format!("bad strategy list `{spec}`"));
    let mut out = Vec::new();
    for part in spec.split(',') {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u8, u8) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.trim().parse().map_err(|_| bad())?),
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Reads and preprocesses an instance.
fn load(path: &Path) -> Result<(Instance, Instance, PreprocessReport), Error> {
    let original = Instance::read(path).map_err(|e| match e {
        Error::Io(io) => Error::InvalidInput(format!("{}: {io}", path.display())),
        e => e,
    })?;
    let (reduced, report) = preprocess_with_report(&original)?;
    Ok((original, reduced, report))
}

/// Maps a downgrade on the reduced network back to the original edges.
fn lift(original: &Instance, report: &PreprocessReport, gamma: &Downgrade) -> Vec<f64> {
    let mut g = vec![0.0; original.m()];
    for (k, &e) in report.kept.iter().enumerate() {
        g[e] = gamma.get(k);
    }
    g
}

fn print(v: &Value) {
    let text = serde_json::to_string_pretty(v).expect("json values serialize");
    // A closed pipe downstream is not an error for us.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Generate {
            n,
            p_mode,
            radius_mode,
            b_per,
            seed,
            out,
        } => {
            let inst = generate(&GenConfig {
                n,
                p_mode,
                radius_mode,
                b_per,
                seed,
            })?;
            inst.write(&out)?;
            print(&json!({
                "out": out, "n": inst.n(), "m": inst.m(), "p": inst.p,
                "radius": inst.radius, "budget": inst.budget,
            }));
        }
        Command::Preprocess { input, output } => {
            let (_, reduced, report) = load(&input)?;
            reduced.write(&output)?;
            print(&json!({ "out": output, "report": report }));
        }
        Command::Attack {
            instance,
            facilities,
            time_limit,
        } => {
            let (original, reduced, report) = load(&instance)?;
            let x = FacilitySet::with_size(facilities, reduced.n(), reduced.p)?;
            let res = solve_attacker(&reduced, &x, seconds(time_limit)?)?;
            let before = coverage(&reduced.network, &reduced.zero_downgrade(), &x, reduced.radius)?.demand;
            print(&json!({
                "facilities": x.as_slice(),
                "status": res.status.to_string(),
                "covered_before": before,
                "q": res.objective,
                "covered_after": before - res.objective,
                "uncovered": res.uncovered,
                "best_bound": res.best_bound,
                "gamma": lift(&original, &report, &res.gamma),
            }));
        }
        Command::Heuristic {
            instance,
            variant,
            strategies,
            ls_iters,
            time_limit,
            alt_iters,
        } => {
            let (original, reduced, report) = load(&instance)?;
            let mut cfg: HeuristicConfig = variant.parse()?;
            if let Some(s) = strategies {
                cfg.strategies = parse_strategies(&s)?;
            }
            if let Some(k) = ls_iters {
                cfg.ls_max_iters = k;
            }
            if let Some(k) = alt_iters {
                cfg.max_alt_iters = k;
            }
            if time_limit.is_some() {
                cfg.attacker_time_limit = seconds(time_limit)?;
            }
            let sol = run_matheuristic(&reduced, &cfg)?;
            print(&json!({
                "method": cfg.name(),
                "facilities": sol.facilities.as_slice(),
                "value": sol.value,
                "gamma": lift(&original, &report, &sol.gamma),
                "trace": sol.trace,
            }));
        }
        Command::Exact { instance, oracle } => {
            let (original, reduced, report) = load(&instance)?;
            let mode = if oracle { AttackerMode::Oracle } else { AttackerMode::Milp };
            let sol = solve_exact_enum(&reduced, mode)?;
            print(&json!({
                "facilities": sol.facilities.as_slice(),
                "value": sol.value,
                "gamma": lift(&original, &report, &sol.gamma),
                "sets_evaluated": sol.table.len(),
            }));
        }
        Command::Bench { config, out_dir } => {
            let cfg = SweepConfig::load(&config)?;
            let rows = bench(&cfg)?;
            write_reports(&out_dir, &rows)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            print(&json!({ "rows": rows.len(), "failed": failed, "out_dir": out_dir }));
        }
        Command::Metrics {
            instance,
            value,
            best_known,
        } => {
            let (_, reduced, _) = load(&instance)?;
            let b = bounds(&reduced)?;
            let mi = managerial_insight_with(&reduced, &b, value)?;
            let gap = gap_bs(best_known.unwrap_or(b.ub), value)?;
            print(&json!({
                "lb": b.lb, "x_lb": b.x_lb, "ub": b.ub, "x_ub": b.x_ub,
                "gap_bs": gap, "mi": mi,
            }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidInput(_) | Error::Parse { .. } | Error::Io(_) => 2,
                Error::GuardExceeded(_) => 3,
                _ => 1,
            })
        }
    }
}
