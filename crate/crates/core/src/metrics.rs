//! Accuracy and cost metrics and the distance-to-best ranking.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative error threshold under which a run counts as accurate for the
/// evaluation-count ranking.
pub const ACCURACY_THRESHOLD: f64 = 0.05;

/// `|beta_hat - beta_ref| / beta_ref`; infinite for non-finite estimates.
pub fn metric_relerr(beta_hat: f64, beta_ref: f64) -> f64 {
    if !beta_hat.is_finite() || !beta_ref.is_finite() {
        return f64::INFINITY;
    }
    libm::fabs(beta_hat - beta_ref) / libm::fabs(beta_ref)
}

/// `relerr * n_eval / n_med`.
pub fn metric_delta(relerr: f64, n_eval: f64, n_med: f64) -> f64 {
    if relerr == 0.0 {
        return 0.0;
    }
    relerr * n_eval / n_med
}

/// Median with the midpoint convention for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Linear-interpolation quantile (`q` in `[0, 1]`).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Some(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RankCriterion {
    Neval,
    RelErr,
    Delta,
}

impl RankCriterion {
    pub fn distances(self) -> [f64; 3] {
        match self {
            RankCriterion::Neval => [2.0, 3.0, 5.0],
            RankCriterion::RelErr | RankCriterion::Delta => [5.0, 10.0, 20.0],
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            RankCriterion::Neval => "neval",
            RankCriterion::RelErr => "relerr",
            RankCriterion::Delta => "delta",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        [RankCriterion::Neval, RankCriterion::RelErr, RankCriterion::Delta].into_iter().find(|c| c.code().eq_ignore_ascii_case(s))
    }
}

/// The fields of a campaign record the ranking needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRecord {
    pub strategy: String,
    pub problem: u32,
    pub replication: usize,
    pub relerr: f64,
    pub n_eval: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub strategy: String,
    /// Runs within each distance of the best, in the order of `distances`.
    pub counts: [usize; 3],
    pub runs: usize,
    pub percentages: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub criterion: RankCriterion,
    pub distances: [f64; 3],
    /// Best first: by the middle distance, then the tight one, the loose
    /// one and finally the strategy id.
    pub entries: Vec<RankEntry>,
}

/// Per (problem, replication) group, counts how often each strategy lands
/// within each distance of the group's best value, and aggregates over all
/// groups the strategy took part in.
pub fn rank_strategies(records: &[RankRecord], criterion: RankCriterion) -> Result<Ranking> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let distances = criterion.distances();
    let mut groups: BTreeMap<(u32, usize), Vec<&RankRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.problem, r.replication)).or_default().push(r);
    }
    let mut tally: BTreeMap<&str, ([usize; 3], usize)> = BTreeMap::new();
    for members in groups.values() {
        let value = |r: &RankRecord| match criterion {
            RankCriterion::Neval => r.n_eval,
            RankCriterion::RelErr => r.relerr,
            RankCriterion::Delta => r.delta,
        };
        let eligible = |r: &RankRecord| match criterion {
            RankCriterion::Neval => r.relerr < ACCURACY_THRESHOLD && r.n_eval.is_finite(),
            _ => value(r).is_finite(),
        };
        let best = members.iter().filter(|r| eligible(r)).map(|r| value(r)).fold(f64::INFINITY, f64::min);
        for r in members {
            let e = tally.entry(r.strategy.as_str()).or_insert(([0; 3], 0));
            e.1 += 1;
            if !best.is_finite() || !eligible(r) {
                continue;
            }
            for (k, d) in distances.iter().enumerate() {
                if value(r) <= d * best {
                    e.0[k] += 1;
                }
            }
        }
    }
    let mut entries: Vec<RankEntry> = tally
        .into_iter()
        .map(|(s, (counts, runs))| RankEntry {
            strategy: String::from(s),
            counts,
            runs,
            percentages: [0, 1, 2].map(|k| 100.0 * counts[k] as f64 / runs as f64),
        })
        .collect();
    entries.sort_by(|a, b| {
        b.percentages[1]
            .total_cmp(&a.percentages[1])
            .then(b.percentages[0].total_cmp(&a.percentages[0]))
            .then(b.percentages[2].total_cmp(&a.percentages[2]))
            .then(a.strategy.cmp(&b.strategy))
    });
    Ok(Ranking { criterion, distances, entries })
}

/// Median evaluation count per problem.
pub fn problem_medians<'a>(items: impl IntoIterator<Item = (u32, f64)> + 'a) -> BTreeMap<u32, f64> {
    let mut by: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for (p, n) in items {
        by.entry(p).or_default().push(n);
    }
    by.into_iter().filter_map(|(p, v)| median(&v).map(|m| (p, m))).collect()
}
