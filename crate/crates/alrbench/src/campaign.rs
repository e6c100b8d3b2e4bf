//! Seeded (problem x strategy x replication) campaigns.
//!
//! Output directory layout:
//!
//! - `records.jsonl`: append-only record store, one finished cell per line
//! - `failures.log`: one line per failed cell
//! - `traces/<cell>.jsonl`: iteration records of each ALR run, then a summary
//! - `results.csv`, `ranking.txt`, `plotdata.json`: written by [`crate::export`]

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::mpsc;
use std::time::Instant;

use alr_core::alr::{run_alr, AlrConfig, AlrTrace};
use alr_core::metrics::metric_relerr;
use alr_core::problems::{problem, BenchmarkProblem};
use alr_core::reliability::{estimate, Estimator, PhysicalFn, SolverConfig};
use alr_core::rng::{derive_seed, stream};
use alr_core::strategy::Strategy;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::CampaignConfig;
use crate::error::{io_err, BenchError, Result};
use crate::geometry::read_geometry;
use crate::registry::{load_registry, with_tower_geometry};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const FAILURES_FILE: &str = "failures.log";
pub const TRACE_DIR: &str = "traces";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRecord {
    pub strategy: String,
    pub problem: u32,
    pub replication: usize,
    pub seed: u64,
    #[serde(with = "any_f64")]
    pub beta_hat: f64,
    #[serde(with = "any_f64")]
    pub pf_hat: f64,
    #[serde(with = "any_f64")]
    pub relerr: f64,
    /// Filled in when the table is exported, from the campaign-wide median.
    #[serde(default)]
    pub delta: Option<f64>,
    pub n_eval: usize,
    pub termination: String,
    pub wall_time_s: f64,
}

/// JSON has no infinities; non-finite values travel as strings.
mod any_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl CampaignRecord {
    /// Surrogate-free solver rows are named after the solver alone.
    pub fn is_baseline(&self) -> bool {
        !self.strategy.contains('+')
    }

    pub fn key(&self) -> CellKey {
        CellKey { problem: self.problem, strategy: self.strategy.clone(), replication: self.replication }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellKey {
    pub problem: u32,
    pub strategy: String,
    pub replication: usize,
}

impl CellKey {
    /// File-name-safe label.
    pub fn label(&self) -> String {
        format!("p{}_{}_r{}", self.problem, self.strategy.replace('+', "-"), self.replication)
    }
}

/// Seed of replication `rep` on `problem`, shared by every strategy.
pub fn cell_seed(base: u64, problem: u32, rep: usize) -> u64 {
    derive_seed(base, &[problem as u64, rep as u64])
}

#[derive(Debug, Clone, Copy)]
enum Method {
    Alr(Strategy),
    Direct(Estimator),
}

struct Cell<'a> {
    key: CellKey,
    seed: u64,
    method: Method,
    problem: &'a BenchmarkProblem,
}

enum Outcome {
    Done(CampaignRecord),
    Failed(CellKey, String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSummary {
    pub records: Vec<CampaignRecord>,
    pub executed: usize,
    pub skipped: usize,
    pub failures: Vec<(CellKey, String)>,
    pub output_dir: PathBuf,
}

/// Problems named in the config, with registry and geometry overrides.
pub fn resolve_problems(cfg: &CampaignConfig) -> Result<Vec<BenchmarkProblem>> {
    let all = match &cfg.registry {
        Some(path) => load_registry(path)?,
        None => cfg.problems.iter().filter_map(|id| problem(*id)).collect(),
    };
    let all = match &cfg.tower_geometry {
        Some(path) => with_tower_geometry(all, &read_geometry(path)?)?,
        None => all,
    };
    let mut out = Vec::new();
    for id in &cfg.problems {
        let p = all.iter().find(|p| p.id == *id).ok_or(BenchError::UnknownProblem(*id))?;
        if !p.is_runnable() {
            return Err(BenchError::NotRunnable(*id));
        }
        out.push(p.clone());
    }
    Ok(out)
}

pub fn alr_config(cfg: &CampaignConfig) -> AlrConfig {
    AlrConfig {
        solver: SolverConfig::for_mode(cfg.mode),
        initial_size: cfg.initial_size,
        max_enrichment: cfg.max_enrichment,
        ..AlrConfig::default()
    }
}

pub fn read_records(path: &Path) -> Result<Vec<CampaignRecord>> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    let lines = BufReader::new(f).lines().collect::<std::io::Result<Vec<String>>>().map_err(io_err(path))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            // a torn final line from an interrupted run is dropped
            Err(_) if Some(i) == last => {}
            Err(e) => return Err(BenchError::Parse { path: path.to_path_buf(), line: i + 1, msg: e.to_string() }),
        }
    }
    Ok(out)
}

fn write_trace(dir: &Path, key: &CellKey, trace: &AlrTrace) -> Result<()> {
    let path = dir.join(format!("{}.jsonl", key.label()));
    let mut w = BufWriter::new(File::create(&path).map_err(io_err(&path))?);
    for r in &trace.records {
        serde_json::to_writer(&mut w, r)?;
        writeln!(w).map_err(io_err(&path))?;
    }
    let summary = AlrTrace { records: Vec::new(), ..trace.clone() };
    serde_json::to_writer(&mut w, &serde_json::json!({ "summary": summary }))?;
    writeln!(w).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))
}

fn run_cell(cell: &Cell, alr: &AlrConfig, trace_dir: &Path) -> Result<CampaignRecord> {
    let p = cell.problem;
    let rv = p.input()?;
    let lsf = p.lsf.clone().ok_or(BenchError::NotRunnable(p.id))?;
    let start = Instant::now();
    let (beta, pf, n_eval, termination) = match cell.method {
        Method::Alr(s) => {
            let t = run_alr(&s, rv, |x: &[f64]| lsf(x), alr, cell.seed)?;
            write_trace(trace_dir, &cell.key, &t)?;
            (t.beta, t.pf, t.n_evals, t.termination.code().to_string())
        }
        Method::Direct(e) => {
            let r = estimate(e, &mut PhysicalFn(|x: &[f64]| lsf(x)), rv, &SolverConfig::standard(), &mut stream(cell.seed, &[4]))?;
            (r.beta, r.pf, r.n_evals, "direct".to_string())
        }
    };
    Ok(CampaignRecord {
        strategy: cell.key.strategy.clone(),
        problem: p.id,
        replication: cell.key.replication,
        seed: cell.seed,
        beta_hat: beta,
        pf_hat: pf,
        relerr: metric_relerr(beta, p.beta_ref),
        delta: None,
        n_eval,
        termination,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Runs every pending cell and returns the full record table. With
/// `resume`, cells already in `records.jsonl` are skipped; otherwise the
/// store is started afresh. Failed cells are logged and left out.
pub fn run_campaign(cfg: &CampaignConfig, resume: bool) -> Result<CampaignSummary> {
    cfg.validate()?;
    let problems = resolve_problems(cfg)?;
    let out = cfg.output_dir.clone();
    let traces = out.join(TRACE_DIR);
    std::fs::create_dir_all(&traces).map_err(io_err(&traces))?;
    let store = out.join(RECORDS_FILE);

    let previous = if resume { read_records(&store)? } else { Vec::new() };
    let done: BTreeSet<CellKey> = previous.iter().map(CampaignRecord::key).collect();

    let mut methods: Vec<(String, Method)> = cfg.strategies().into_iter().map(|s| (s.id(), Method::Alr(s))).collect();
    if cfg.baselines {
        methods.extend([Estimator::Is, Estimator::Sus].map(|e| (e.code().to_string(), Method::Direct(e))));
    }
    let mut cells = Vec::new();
    for p in &problems {
        for rep in 0..cfg.replications {
            for (id, m) in &methods {
                let key = CellKey { problem: p.id, strategy: id.clone(), replication: rep };
                if !done.contains(&key) {
                    cells.push(Cell { key, seed: cell_seed(cfg.base_seed, p.id, rep), method: *m, problem: p });
                }
            }
        }
    }
    let skipped = done.len();
    let executed = cells.len();

    // rewrite the store so a torn line from an interrupted run disappears
    {
        let mut w = BufWriter::new(File::create(&store).map_err(io_err(&store))?);
        for r in &previous {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w).map_err(io_err(&store))?;
        }
        w.flush().map_err(io_err(&store))?;
    }
    let fail_path = out.join(FAILURES_FILE);
    let mut fail_log = OpenOptions::new().create(true).append(true).truncate(false).open(&fail_path).map_err(io_err(&fail_path))?;
    if !resume {
        fail_log.set_len(0).map_err(io_err(&fail_path))?;
    }

    let alr = alr_config(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let (tx, rx) = mpsc::channel::<Outcome>();

    let (fresh, failures) = std::thread::scope(|scope| -> Result<_> {
        // single writer for the record store and the failure log
        let writer = scope.spawn(|| -> Result<(Vec<CampaignRecord>, Vec<(CellKey, String)>)> {
            let mut w = OpenOptions::new().append(true).open(&store).map_err(io_err(&store))?;
            let mut recs = Vec::new();
            let mut fails = Vec::new();
            for o in rx {
                match o {
                    Outcome::Done(r) => {
                        let mut line = serde_json::to_string(&r)?;
                        line.push('\n');
                        w.write_all(line.as_bytes()).map_err(io_err(&store))?;
                        recs.push(r);
                    }
                    Outcome::Failed(k, why) => {
                        writeln!(fail_log, "{}\t{}", k.label(), why).map_err(io_err(&fail_path))?;
                        fails.push((k, why));
                    }
                }
            }
            Ok((recs, fails))
        });
        pool.install(|| {
            cells.par_iter().for_each_with(tx, |tx, cell| {
                let res = catch_unwind(AssertUnwindSafe(|| run_cell(cell, &alr, &traces)));
                let outcome = match res {
                    Ok(Ok(r)) => Outcome::Done(r),
                    Ok(Err(e)) => Outcome::Failed(cell.key.clone(), e.to_string()),
                    Err(panic) => {
                        let msg = panic
                            .downcast_ref::<&str>()
                            .map(|s| s.to_string())
                            .or_else(|| panic.downcast_ref::<String>().cloned())
                            .unwrap_or_else(|| "panic".into());
                        Outcome::Failed(cell.key.clone(), format!("panic: {msg}"))
                    }
                };
                let _ = tx.send(outcome);
            })
        });
        writer.join().expect("writer thread")
    })?;

    let mut records = previous;
    records.extend(fresh);
    records.sort_by(|a, b| a.key().cmp(&b.key()));
    let mut failures = failures;
    failures.sort();
    Ok(CampaignSummary { records, executed, skipped, failures, output_dir: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_ignore_the_strategy() {
        assert_eq!(cell_seed(7, 12, 0), cell_seed(7, 12, 0));
        assert_ne!(cell_seed(7, 12, 0), cell_seed(7, 12, 1));
        assert_ne!(cell_seed(7, 12, 0), cell_seed(7, 13, 0));
    }

    #[test]
    fn labels_are_file_safe() {
        let k = CellKey { problem: 12, strategy: "PCK+SuS+U+Co".into(), replication: 2 };
        assert_eq!(k.label(), "p12_PCK-SuS-U-Co_r2");
    }

    #[test]
    fn infinite_values_survive_the_store() {
        let r = CampaignRecord {
            strategy: "Kriging+MCS+U+BB".into(),
            problem: 15,
            replication: 0,
            seed: 3,
            beta_hat: f64::INFINITY,
            pf_hat: 0.0,
            relerr: f64::INFINITY,
            delta: None,
            n_eval: 12,
            termination: "budget_exhausted".into(),
            wall_time_s: 0.1,
        };
        let line = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<CampaignRecord>(&line).unwrap(), r);
        let mut nan = r.clone();
        nan.beta_hat = f64::NAN;
        let back: CampaignRecord = serde_json::from_str(&serde_json::to_string(&nan).unwrap()).unwrap();
        assert!(back.beta_hat.is_nan());
    }

    #[test]
    fn torn_tail_is_dropped_but_corruption_is_not() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.jsonl");
        let good = r#"{"strategy":"IS","problem":12,"replication":0,"seed":1,"beta_hat":2.5,"pf_hat":0.006,"relerr":0.2,"n_eval":900,"termination":"direct","wall_time_s":0.0}"#;
        std::fs::write(&p, format!("{good}\n{{\"strategy\":\"S")).unwrap();
        assert_eq!(read_records(&p).unwrap().len(), 1);
        std::fs::write(&p, format!("{{oops\n{good}\n")).unwrap();
        assert!(matches!(read_records(&p), Err(BenchError::Parse { line: 1, .. })));
    }

    #[test]
    fn stub_problems_are_refused() {
        let cfg = CampaignConfig { problems: vec![1], ..Default::default() };
        assert!(matches!(resolve_problems(&cfg), Err(BenchError::NotRunnable(1))));
        let cfg = CampaignConfig { problems: vec![17], ..Default::default() };
        assert!(matches!(resolve_problems(&cfg), Err(BenchError::UnknownProblem(17))));
    }
}
