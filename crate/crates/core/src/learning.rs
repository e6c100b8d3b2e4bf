//! Learning functions and enrichment-point selection.

use alloc::vec::Vec;

use crate::design::ExperimentalDesign;
use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_pdf};

/// Standardized distance below which a candidate counts as a copy of a
/// design point.
pub const CANDIDATE_DUPLICATE_TOLERANCE: f64 = 1e-10;

/// Deviation number `|mu| / sigma`.
pub fn lf_u(mean: f64, variance: f64) -> f64 {
    let sigma = libm::sqrt(variance.max(0.0));
    if sigma == 0.0 {
        if mean == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        libm::fabs(mean) / sigma
    }
}

/// Expected feasibility around the zero level with half-width `2 sigma`.
pub fn lf_eff(mean: f64, variance: f64) -> f64 {
    let sigma = libm::sqrt(variance.max(0.0));
    if sigma == 0.0 {
        return 0.0;
    }
    let eps = 2.0 * sigma;
    let t0 = -mean / sigma;
    let tm = (-eps - mean) / sigma;
    let tp = (eps - mean) / sigma;
    let v = mean * (2.0 * norm_cdf(t0) - norm_cdf(tm) - norm_cdf(tp)) - sigma * (2.0 * norm_pdf(t0) - norm_pdf(tm) - norm_pdf(tp))
        + eps * (norm_cdf(tp) - norm_cdf(tm));
    v.max(0.0)
}

/// Sign agreement of bootstrap replicates `|B_safe - B_fail| / B`.
pub fn lf_fbr(replicates: &[f64]) -> f64 {
    if replicates.is_empty() {
        return 0.0;
    }
    let safe = replicates.iter().filter(|v| **v > 0.0).count() as f64;
    let fail = replicates.len() as f64 - safe;
    libm::fabs(safe - fail) / replicates.len() as f64
}

/// Whether the best score is the smallest or the largest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Minimize,
    Maximize,
}

/// Index of the selected candidate. Equal scores are resolved by the
/// largest distance to the nearest design point, then by the lowest index;
/// candidates that coincide with a design point are skipped.
pub fn select_enrichment(candidates: &[&[f64]], scores: &[f64], objective: Objective, ed: &ExperimentalDesign) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::EmptyPool);
    }
    let key = |s: f64| -> f64 {
        let k = match objective {
            Objective::Minimize => s,
            Objective::Maximize => -s,
        };
        if k.is_nan() {
            f64::INFINITY
        } else {
            k
        }
    };
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| key(scores[a]).total_cmp(&key(scores[b])).then(a.cmp(&b)));
    let scale = ed.scales();
    let nearest = |x: &[f64]| -> f64 {
        ed.inputs()
            .iter()
            .map(|p| {
                let mut s = 0.0;
                for ((a, b), w) in p.iter().zip(x).zip(&scale) {
                    let d = (a - b) / w;
                    s += d * d;
                }
                libm::sqrt(s)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let mut start = 0;
    while start < order.len() {
        let k0 = key(scores[order[start]]);
        let mut end = start + 1;
        while end < order.len() && key(scores[order[end]]) == k0 {
            end += 1;
        }
        let mut best: Option<(usize, f64)> = None;
        for &i in &order[start..end] {
            let dist = nearest(candidates[i]);
            if dist <= CANDIDATE_DUPLICATE_TOLERANCE {
                continue;
            }
            // indices within the group are ascending, so strict > keeps the lowest
            if best.map_or(true, |(_, bd)| dist > bd) {
                best = Some((i, dist));
            }
        }
        if let Some((i, _)) = best {
            return Ok(i);
        }
        start = end;
    }
    Err(Error::EmptyPool)
}
