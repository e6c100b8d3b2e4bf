//! Result table, ranking report and plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use alr_core::metrics::{metric_delta, problem_medians, quantile, rank_strategies, RankCriterion, RankRecord, Ranking};
use serde::{Deserialize, Serialize};

use crate::campaign::CampaignRecord;
use crate::error::{io_err, BenchError, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const RANKING_FILE: &str = "ranking.txt";
pub const PLOTDATA_FILE: &str = "plotdata.json";

pub const CSV_HEADER: [&str; 11] = ["strategy", "problem", "replication", "seed", "beta_hat", "pf_hat", "relerr", "delta", "n_eval", "termination", "wall_time_s"];

/// Median evaluation count per problem over the strategy runs (baseline
/// rows excluded).
pub fn median_evaluations(records: &[CampaignRecord]) -> BTreeMap<u32, f64> {
    problem_medians(records.iter().filter(|r| !r.is_baseline()).map(|r| (r.problem, r.n_eval as f64)))
}

/// Fills in `delta` from the per-problem medians.
pub fn with_deltas(records: &[CampaignRecord]) -> Vec<CampaignRecord> {
    let med = median_evaluations(records);
    records
        .iter()
        .map(|r| {
            let n_med = med.get(&r.problem).copied().unwrap_or(r.n_eval as f64);
            CampaignRecord { delta: Some(metric_delta(r.relerr, r.n_eval as f64, n_med)), ..r.clone() }
        })
        .collect()
}

fn sorted(records: &[CampaignRecord]) -> Vec<CampaignRecord> {
    let mut v = records.to_vec();
    v.sort_by(|a, b| a.key().cmp(&b.key()));
    v
}

pub fn write_csv<W: Write>(records: &[CampaignRecord], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in sorted(records) {
        let delta = r.delta.map(|d| d.to_string()).unwrap_or_default();
        out.write_record([
            r.strategy.clone(),
            r.problem.to_string(),
            r.replication.to_string(),
            r.seed.to_string(),
            r.beta_hat.to_string(),
            r.pf_hat.to_string(),
            r.relerr.to_string(),
            delta,
            r.n_eval.to_string(),
            r.termination.clone(),
            r.wall_time_s.to_string(),
        ])?;
    }
    out.flush().map_err(io_err("csv output"))?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<Vec<CampaignRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(BenchError::Config(format!("unexpected CSV header {header:?}")));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |c: &str| BenchError::Parse { path: "csv".into(), line, msg: format!("bad {c}") };
        let f = |k: usize, c: &str| row[k].parse::<f64>().map_err(|_| bad(c));
        out.push(CampaignRecord {
            strategy: row[0].to_string(),
            problem: row[1].parse().map_err(|_| bad("problem"))?,
            replication: row[2].parse().map_err(|_| bad("replication"))?,
            seed: row[3].parse().map_err(|_| bad("seed"))?,
            beta_hat: f(4, "beta_hat")?,
            pf_hat: f(5, "pf_hat")?,
            relerr: f(6, "relerr")?,
            delta: if row[7].is_empty() { None } else { Some(f(7, "delta")?) },
            n_eval: row[8].parse().map_err(|_| bad("n_eval"))?,
            termination: row[9].to_string(),
            wall_time_s: f(10, "wall_time_s")?,
        });
    }
    Ok(out)
}

pub fn rank_records(records: &[CampaignRecord]) -> Vec<RankRecord> {
    with_deltas(records)
        .into_iter()
        .map(|r| RankRecord {
            strategy: r.strategy,
            problem: r.problem,
            replication: r.replication,
            relerr: r.relerr,
            n_eval: r.n_eval as f64,
            delta: r.delta.unwrap_or(f64::INFINITY),
        })
        .collect()
}

pub fn rank(records: &[CampaignRecord], criterion: RankCriterion) -> Result<Ranking> {
    Ok(rank_strategies(&rank_records(records), criterion)?)
}

pub fn format_ranking(r: &Ranking) -> String {
    let mut s = String::new();
    let d = r.distances;
    let _ = writeln!(s, "criterion {} (within {}x / {}x / {}x of the best)", r.criterion.code(), d[0], d[1], d[2]);
    let w = r.entries.iter().map(|e| e.strategy.len()).max().unwrap_or(8).max(8);
    let _ = writeln!(s, "{:>4}  {:<w$}  {:>7}  {:>7}  {:>7}  {:>5}", "rank", "strategy", format!("{}x", d[0]), format!("{}x", d[1]), format!("{}x", d[2]), "runs");
    for (i, e) in r.entries.iter().enumerate() {
        let p = e.percentages;
        let _ = writeln!(s, "{:>4}  {:<w$}  {:>6.1}%  {:>6.1}%  {:>6.1}%  {:>5}", i + 1, e.strategy, p[0], p[1], p[2], e.runs);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub q05: f64,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q95: f64,
}

impl Quantiles {
    fn of(v: &[f64]) -> Option<Self> {
        let q = |p| quantile(v, p);
        Some(Self { q05: q(0.05)?, q25: q(0.25)?, q50: q(0.5)?, q75: q(0.75)?, q95: q(0.95)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpread {
    pub strategy: String,
    pub runs: usize,
    pub relerr: Quantiles,
    pub n_eval: Quantiles,
    pub delta: Quantiles,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpread {
    pub problem: u32,
    pub n_med: Option<f64>,
    pub strategies: Vec<StrategySpread>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotData {
    pub problems: Vec<ProblemSpread>,
}

pub fn plot_data(records: &[CampaignRecord]) -> Result<PlotData> {
    if records.is_empty() {
        return Err(BenchError::EmptyTable);
    }
    let med = median_evaluations(records);
    let mut by: BTreeMap<u32, BTreeMap<String, Vec<CampaignRecord>>> = BTreeMap::new();
    for r in with_deltas(records) {
        by.entry(r.problem).or_default().entry(r.strategy.clone()).or_default().push(r);
    }
    let problems = by
        .into_iter()
        .map(|(p, strategies)| ProblemSpread {
            problem: p,
            n_med: med.get(&p).copied(),
            strategies: strategies
                .into_iter()
                .map(|(s, rs)| {
                    let col = |f: fn(&CampaignRecord) -> f64| rs.iter().map(f).collect::<Vec<f64>>();
                    StrategySpread {
                        strategy: s,
                        runs: rs.len(),
                        relerr: Quantiles::of(&col(|r| r.relerr)).expect("non-empty"),
                        n_eval: Quantiles::of(&col(|r| r.n_eval as f64)).expect("non-empty"),
                        delta: Quantiles::of(&col(|r| r.delta.unwrap_or(f64::INFINITY))).expect("non-empty"),
                    }
                })
                .collect(),
        })
        .collect();
    Ok(PlotData { problems })
}

/// Writes `results.csv`, `ranking.txt` and `plotdata.json` into `dir`.
pub fn export_results(records: &[CampaignRecord], dir: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(BenchError::EmptyTable);
    }
    let table = with_deltas(records);
    let path = dir.join(RESULTS_FILE);
    write_csv(&table, std::fs::File::create(&path).map_err(io_err(&path))?)?;

    let mut report = String::new();
    for c in [RankCriterion::Neval, RankCriterion::RelErr, RankCriterion::Delta] {
        report.push_str(&format_ranking(&rank(records, c)?));
        report.push('\n');
    }
    let path = dir.join(RANKING_FILE);
    std::fs::write(&path, report).map_err(io_err(&path))?;

    let path = dir.join(PLOTDATA_FILE);
    let json = serde_json::to_string_pretty(&plot_data(records)?)?;
    std::fs::write(&path, json).map_err(io_err(&path))?;
    Ok(())
}
