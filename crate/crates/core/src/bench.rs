//! Benchmark sweeps over generated instances.
//!
//! A sweep is read from TOML:
//!
//! ```toml
//! n = [8, 10]
//! p_modes = [2, "n/10"]
//! radius_modes = ["at_least_one"]
//! b_per = [0.25, 0.5]
//! seeds = [1, 2]
//! methods = ["exact", "OptimalOutIn_10", "FixedOutIn_a"]
//! ```
//!
//! Every generated instance is preprocessed, then solved by each method.
//! Results go to `results.csv` (one row per instance and method) and
//! `profile.csv` (cumulative solved count against time, per method).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::heuristic::{construct_and_improve, Evaluator, HeuristicConfig};
use crate::instance::{generate, GenConfig, Instance, PMode, RadiusMode};
use crate::metrics::{bounds, gap_bs, managerial_insight_with};
use crate::oracles::{solve_exact_enum, AttackerMode};
use crate::preprocess::preprocess;

/// First line of `results.csv`.
pub const RESULTS_HEADER: &str = "# dmclp-bench results v1";
/// First line of `profile.csv`.
pub const PROFILE_HEADER: &str = "# dmclp-bench profile v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: Vec<usize>,
    pub p_modes: Vec<PMode>,
    pub radius_modes: Vec<RadiusMode>,
    pub b_per: Vec<f64>,
    pub seeds: Vec<u64>,
    pub methods: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Exact,
    Heuristic(HeuristicConfig),
}

impl Method {
    pub fn parse(name: &str) -> Result<Method> {
        if name == "exact" {
            Ok(Method::Exact)
        } else {
            name.parse().map(Method::Heuristic)
        }
    }
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig = toml::from_str(text).map_err(|e| Error::invalid(format!("sweep config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let lists = [
            ("n", self.n.len()),
            ("p_modes", self.p_modes.len()),
            ("radius_modes", self.radius_modes.len()),
            ("b_per", self.b_per.len()),
            ("seeds", self.seeds.len()),
            ("methods", self.methods.len()),
        ];
        if let Some((name, _)) = lists.iter().find(|(_, len)| *len == 0) {
            return Err(Error::invalid(format!("sweep list `{name}` is empty")));
        }
        for m in &self.methods {
            Method::parse(m)?;
        }
        Ok(())
    }

    /// Instance configurations in sweep order (n, p, radius, b_per, seed).
    pub fn instances(&self) -> Vec<GenConfig> {
        let mut out = Vec::new();
        for &n in &self.n {
            for &p_mode in &self.p_modes {
                for &radius_mode in &self.radius_modes {
                    for &b_per in &self.b_per {
                        for &seed in &self.seeds {
                            out.push(GenConfig {
                                n,
                                p_mode,
                                radius_mode,
                                b_per,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

pub fn instance_name(c: &GenConfig) -> String {
    let p = c.p_mode.to_string().replace('/', "");
    format!("n{}_p{}_{}_b{}_s{}", c.n, p, c.radius_mode, c.b_per, c.seed)
}

fn round_to(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

fn fmt2<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_str(&format!("{v:.2}")),
        None => s.serialize_str(""),
    }
}

fn fmt3<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{x:.3}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub n: usize,
    pub p: usize,
    pub radius_mode: RadiusMode,
    pub b_per: f64,
    pub seed: u64,
    pub method: String,
    /// `ok`, or the error message.
    pub status: String,
    pub value: Option<u64>,
    #[serde(serialize_with = "fmt3")]
    pub time_s: f64,
    /// Summed wall time of attacker solves.
    #[serde(serialize_with = "fmt3")]
    pub solver_time_s: f64,
    pub lb: Option<u64>,
    pub ub: Option<u64>,
    /// Best value over all methods on this instance.
    pub best_known: Option<u64>,
    #[serde(serialize_with = "fmt2")]
    pub gap_bs: Option<f64>,
    #[serde(serialize_with = "fmt2")]
    pub mi_o: Option<f64>,
    #[serde(serialize_with = "fmt2")]
    pub mi_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub method: String,
    #[serde(serialize_with = "fmt3")]
    pub time_s: f64,
    pub solved: usize,
}

/// Value, total seconds and solver seconds of one method run.
fn run_method(inst: &Instance, method: &Method) -> Result<(u64, f64, f64)> {
    let start = Instant::now();
    match method {
        Method::Exact => {
            let sol = solve_exact_enum(inst, AttackerMode::Milp)?;
            let t = start.elapsed().as_secs_f64();
            Ok((sol.value, t, t))
        }
        Method::Heuristic(cfg) => {
            let ev = Evaluator::new(inst);
            let sol = construct_and_improve(&ev, cfg)?;
            Ok((sol.value, start.elapsed().as_secs_f64(), ev.solver_seconds()))
        }
    }
}

fn rows_for(gen: &GenConfig, methods: &[(String, Method)]) -> Vec<BenchRow> {
    let name = instance_name(gen);
    let base = |method: &str, status: String| BenchRow {
        instance: name.clone(),
        n: gen.n,
        p: gen.p_mode.facilities(gen.n),
        radius_mode: gen.radius_mode,
        b_per: gen.b_per,
        seed: gen.seed,
        method: method.to_string(),
        status,
        value: None,
        time_s: 0.0,
        solver_time_s: 0.0,
        lb: None,
        ub: None,
        best_known: None,
        gap_bs: None,
        mi_o: None,
        mi_p: None,
    };
    let prepared = generate(gen).and_then(|i| preprocess(&i)).and_then(|i| {
        let b = bounds(&i)?;
        Ok((i, b))
    });
    let (inst, b) = match prepared {
        Ok(v) => v,
        Err(e) => return methods.iter().map(|(m, _)| base(m, e.to_string())).collect(),
    };

    let mut rows: Vec<BenchRow> = methods
        .iter()
        .map(|(name, m)| match run_method(&inst, m) {
            Ok((value, t, st)) => BenchRow {
                value: Some(value),
                time_s: round_to(t, 3),
                solver_time_s: round_to(st, 3),
                lb: Some(b.lb),
                ub: Some(b.ub),
                ..base(name, "ok".into())
            },
            Err(e) => BenchRow {
                lb: Some(b.lb),
                ub: Some(b.ub),
                ..base(name, e.to_string())
            },
        })
        .collect();

    let best = rows.iter().filter_map(|r| r.value).max();
    for r in &mut rows {
        r.best_known = best;
        let (Some(v), Some(bk)) = (r.value, best) else { continue };
        r.gap_bs = gap_bs(bk, v).ok().map(|g| round_to(g, 2));
        match managerial_insight_with(&inst, &b, v) {
            Ok(mi) => {
                r.mi_o = Some(round_to(mi.mi_o, 2));
                r.mi_p = Some(round_to(mi.mi_p, 2));
            }
            Err(Error::InvalidInput(_)) => {}
            Err(e) => r.status = e.to_string(),
        }
    }
    rows
}

/// Runs the sweep; instances are solved in parallel, rows come back in
/// sweep order. Failures are recorded in the row status.
pub fn bench(cfg: &SweepConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let methods: Vec<(String, Method)> = cfg
        .methods
        .iter()
        .map(|m| Ok((m.clone(), Method::parse(m)?)))
        .collect::<Result<_>>()?;
    let per_instance: Vec<Vec<BenchRow>> = cfg
        .instances()
        .par_iter()
        .map(|g| rows_for(g, &methods))
        .collect();
    Ok(per_instance.into_iter().flatten().collect())
}

/// For each method, successful runs sorted by time with their cumulative
/// count.
pub fn performance_profile(rows: &[BenchRow]) -> Vec<ProfilePoint> {
    let mut methods: Vec<&str> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
    }
    let mut out = Vec::new();
    for m in methods {
        let mut times: Vec<f64> = rows
            .iter()
            .filter(|r| r.method == m && r.value.is_some())
            .map(|r| r.time_s)
            .collect();
        times.sort_by(f64::total_cmp);
        out.extend(times.into_iter().enumerate().map(|(k, t)| ProfilePoint {
            method: m.to_string(),
            time_s: t,
            solved: k + 1,
        }));
    }
    out
}

fn write_csv<T: Serialize>(path: &Path, header: &str, records: &[T]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "{header}")?;
    let mut w = csv::Writer::from_writer(file);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path, header: &str) -> Result<Vec<T>> {
    let mut reader = BufReader::new(fs::File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    if first.trim_end() != header {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header `{header}`, found `{}`", first.trim_end()),
        });
    }
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn write_results(path: impl AsRef<Path>, rows: &[BenchRow]) -> Result<()> {
    write_csv(path.as_ref(), RESULTS_HEADER, rows)
}

pub fn read_results(path: impl AsRef<Path>) -> Result<Vec<BenchRow>> {
    read_csv(path.as_ref(), RESULTS_HEADER)
}

pub fn write_profile(path: impl AsRef<Path>, points: &[ProfilePoint]) -> Result<()> {
    write_csv(path.as_ref(), PROFILE_HEADER, points)
}

pub fn read_profile(path: impl AsRef<Path>) -> Result<Vec<ProfilePoint>> {
    read_csv(path.as_ref(), PROFILE_HEADER)
}

/// Writes `results.csv` and `profile.csv` into `dir`, creating it.
pub fn write_reports(dir: impl AsRef<Path>, rows: &[BenchRow]) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_results(dir.join("results.csv"), rows)?;
    write_profile(dir.join("profile.csv"), &performance_profile(rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
n = [6]
p_modes = [2]
radius_modes = ["at_least_one"]
b_per = [0.5]
seeds = [1, 2]
methods = ["exact", "OptimalOutIn_1"]
"#;

    #[test]
    fn parses_sweep() {
        let cfg = SweepConfig::from_toml(SMALL).unwrap();
        assert_eq!(cfg.p_modes, vec![PMode::Fixed(2)]);
        assert_eq!(cfg.instances().len(), 2);
        let bad = SMALL.replace("OptimalOutIn_1", "Nope");
        assert!(SweepConfig::from_toml(&bad).is_err());
        let empty = SMALL.replace("seeds = [1, 2]", "seeds = []");
        assert!(SweepConfig::from_toml(&empty).is_err());
        assert!(SweepConfig::from_toml("n = [6]\nextra = 1").is_err());
    }

    #[test]
    fn two_seeds_two_methods_four_rows() {
        let cfg = SweepConfig::from_toml(SMALL).unwrap();
        let rows = bench(&cfg).unwrap();
        assert_eq!(rows.len(), 4);
        for r in &rows {
            assert_eq!(r.status, "ok", "{r:?}");
            let (v, lb, ub) = (r.value.unwrap(), r.lb.unwrap(), r.ub.unwrap());
            assert!(lb <= v && v <= ub);
            assert!(r.gap_bs.unwrap() >= 0.0);
        }
        let exact: Vec<_> = rows.iter().filter(|r| r.method == "exact").collect();
        assert!(exact.iter().all(|r| r.value == r.best_known && r.gap_bs == Some(0.0)));
    }

    #[test]
    fn csv_round_trip() {
        let cfg = SweepConfig::from_toml(SMALL).unwrap();
        let rows = bench(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_reports(dir.path(), &rows).unwrap();
        assert_eq!(read_results(dir.path().join("results.csv")).unwrap(), rows);
        let prof = read_profile(dir.path().join("profile.csv")).unwrap();
        assert_eq!(prof, performance_profile(&rows));
        let text = fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert!(text.starts_with(RESULTS_HEADER));
    }

    #[test]
    fn profile_counts() {
        let mk = |m: &str, t: f64, ok: bool| BenchRow {
            instance: "x".into(),
            n: 3,
            p: 1,
            radius_mode: RadiusMode::AtLeastOne,
            b_per: 0.0,
            seed: 0,
            method: m.into(),
            status: "ok".into(),
            value: ok.then_some(1),
            time_s: t,
            solver_time_s: 0.0,
            lb: None,
            ub: None,
            best_known: None,
            gap_bs: None,
            mi_o: None,
            mi_p: None,
        };
        let rows = vec![mk("a", 2.0, true), mk("a", 1.0, true), mk("b", 3.0, false), mk("a", 5.0, false)];
        let prof = performance_profile(&rows);
        assert_eq!(prof.len(), 2);
        assert_eq!((prof[0].time_s, prof[0].solved), (1.0, 1));
        assert_eq!((prof[1].time_s, prof[1].solved), (2.0, 2));
    }
}
