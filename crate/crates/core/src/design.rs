use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum distance between two design points after per-dimension
/// standardization.
pub const DUPLICATE_TOLERANCE: f64 = 1e-12;

/// Paired inputs and true limit-state values. Points past `n_initial` were
/// added by enrichment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalDesign {
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
    n_initial: usize,
}

impl ExperimentalDesign {
    pub fn new(inputs: Vec<Vec<f64>>, outputs: Vec<f64>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::Design("at least one point is required".into()));
        }
        if inputs.len() != outputs.len() {
            return Err(Error::Design(format!("{} inputs but {} outputs", inputs.len(), outputs.len())));
        }
        let dim = inputs[0].len();
        if dim == 0 || inputs.iter().any(|x| x.len() != dim) {
            return Err(Error::Design("inconsistent input dimension".into()));
        }
        if inputs.iter().flatten().chain(&outputs).any(|v| !v.is_finite()) {
            return Err(Error::Design("non-finite value".into()));
        }
        let n_initial = inputs.len();
        let ed = Self { inputs, outputs, n_initial };
        let scale = ed.scales();
        for i in 0..ed.len() {
            for j in 0..i {
                if scaled_distance(&ed.inputs[i], &ed.inputs[j], &scale) <= DUPLICATE_TOLERANCE {
                    return Err(Error::Design(format!("points {j} and {i} coincide")));
                }
            }
        }
        Ok(ed)
    }

    pub fn len(&self) -> usize {
        self.outputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    pub fn n_initial(&self) -> usize {
        self.n_initial
    }

    pub fn n_enriched(&self) -> usize {
        self.len() - self.n_initial
    }

    /// Per-dimension standard deviations (1 where a column is constant).
    pub fn scales(&self) -> Vec<f64> {
        let (_, s) = column_moments(&self.inputs);
        s
    }

    /// True when `x` lies within the duplicate tolerance of a design point.
    pub fn contains(&self, x: &[f64]) -> bool {
        let scale = self.scales();
        self.inputs.iter().any(|p| scaled_distance(p, x, &scale) <= DUPLICATE_TOLERANCE)
    }

    /// Appends an enrichment point.
    pub fn push(&mut self, x: Vec<f64>, y: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Design("dimension mismatch".into()));
        }
        if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Design("non-finite value".into()));
        }
        if self.contains(&x) {
            return Err(Error::Design("duplicate point".into()));
        }
        self.inputs.push(x);
        self.outputs.push(y);
        Ok(())
    }

    /// Same design with outputs replaced, used for bootstrap resamples and
    /// transformed responses.
    pub fn with_outputs(&self, outputs: Vec<f64>) -> Result<Self> {
        if outputs.len() != self.len() {
            return Err(Error::Design("output length mismatch".into()));
        }
        Ok(Self { inputs: self.inputs.clone(), outputs, n_initial: self.n_initial })
    }
}

/// Column means and standard deviations (population); zero deviations map to 1.
pub fn column_moments(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let m = rows.first().map_or(0, |r| r.len());
    let mut mean = alloc::vec![0.0; m];
    for r in rows {
        for (a, v) in mean.iter_mut().zip(r) {
            *a += v / n;
        }
    }
    let mut sd = alloc::vec![0.0; m];
    for r in rows {
        for ((s, v), mu) in sd.iter_mut().zip(r).zip(&mean) {
            *s += (v - mu) * (v - mu) / n;
        }
    }
    for s in sd.iter_mut() {
        *s = libm::sqrt(*s);
        if !(*s > 0.0) {
            *s = 1.0;
        }
    }
    (mean, sd)
}

fn scaled_distance(a: &[f64], b: &[f64], scale: &[f64]) -> f64 {
    let mut s = 0.0;
    for ((x, y), w) in a.iter().zip(b).zip(scale) {
        let d = (x - y) / w;
        s += d * d;
    }
    libm::sqrt(s)
}
