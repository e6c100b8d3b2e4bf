//! Common front for the three surrogate families, and a limit-state adapter
//! so the reliability solvers can run on `mu + k sigma`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::ExperimentalDesign;
use crate::error::Result;
use crate::input::RandomVector;
use crate::kriging::{fit_universal_kriging, HyperSearch, KrigingConfig, KrigingModel, Scratch, Trend};
use crate::pce::{bootstrap_replicates, fit_pce_lars, BootstrapEnsemble, PceConfig, PceModel, SparseBasis};
use crate::pck::{fit_pck_with, PckConfig, PckModel};
use crate::reliability::LimitState;
use crate::strategy::SurrogateKind;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SurrogateConfig {
    pub kriging: KrigingConfig,
    pub pck: PckConfig,
    pub pce: PceConfig,
    pub bootstrap_replicates: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        Self { kriging: KrigingConfig::default(), pck: PckConfig::default(), pce: PceConfig::default(), bootstrap_replicates: 100 }
    }
}

#[derive(Debug, Clone)]
pub enum SurrogateModel {
    Kriging(KrigingModel),
    Pck(PckModel),
    Pce { model: PceModel, bootstrap: BootstrapEnsemble },
}

/// Per-thread buffers for surrogate predictions.
#[derive(Debug, Default, Clone)]
pub struct PredictScratch {
    kriging: Scratch,
    table: Vec<f64>,
    vals: Vec<f64>,
    sparse: Option<SparseBasis>,
}

impl SurrogateModel {
    pub fn kind(&self) -> SurrogateKind {
        match self {
            SurrogateModel::Kriging(_) => SurrogateKind::Kriging,
            SurrogateModel::Pck(_) => SurrogateKind::Pck,
            SurrogateModel::Pce { .. } => SurrogateKind::Pce,
        }
    }

    pub fn kriging(&self) -> Option<&KrigingModel> {
        match self {
            SurrogateModel::Kriging(k) => Some(k),
            SurrogateModel::Pck(p) => Some(&p.kriging),
            SurrogateModel::Pce { .. } => None,
        }
    }

    fn pce_mean(model: &PceModel, u: &[f64], s: &mut PredictScratch) -> f64 {
        let sb = s.sparse.get_or_insert_with(|| SparseBasis::new(&model.basis));
        s.vals.resize(model.basis.len(), 0.0);
        sb.eval_into(u, &mut s.table, &mut s.vals);
        crate::linalg::dot(&s.vals, &model.coefficients)
    }

    /// Mean at a point given in both spaces.
    pub fn mean(&self, x: &[f64], u: &[f64], s: &mut PredictScratch) -> f64 {
        match self {
            SurrogateModel::Kriging(k) => k.mean_with(x, Some(u), &mut s.kriging),
            SurrogateModel::Pck(p) => p.kriging.mean_with(x, Some(u), &mut s.kriging),
            SurrogateModel::Pce { model, .. } => Self::pce_mean(model, u, s),
        }
    }

    /// Mean and variance; the PCE reports zero variance.
    pub fn mean_variance(&self, x: &[f64], u: &[f64], s: &mut PredictScratch) -> (f64, f64) {
        match self {
            SurrogateModel::Kriging(k) => k.predict_with(x, Some(u), &mut s.kriging),
            SurrogateModel::Pck(p) => p.kriging.predict_with(x, Some(u), &mut s.kriging),
            SurrogateModel::Pce { model, .. } => (Self::pce_mean(model, u, s), 0.0),
        }
    }

    /// Means and variances of row-major points, `dim` columns.
    pub fn mean_variance_rows(&self, x: &[f64], u: &[f64], dim: usize, means: &mut [f64], vars: &mut [f64], s: &mut PredictScratch) {
        match self {
            SurrogateModel::Kriging(k) => k.predict_rows(x, Some(u), means, vars, &mut s.kriging),
            SurrogateModel::Pck(p) => p.kriging.predict_rows(x, Some(u), means, vars, &mut s.kriging),
            SurrogateModel::Pce { model, .. } => {
                for (i, ur) in u.chunks(dim).enumerate() {
                    means[i] = Self::pce_mean(model, ur, s);
                    vars[i] = 0.0;
                }
            }
        }
    }

    /// Bootstrap replicate predictions (PCE only).
    pub fn replicates(&self, u: &[f64]) -> Option<Vec<f64>> {
        match self {
            SurrogateModel::Pce { bootstrap, .. } => Some(bootstrap.predict_u(u)),
            _ => None,
        }
    }

    /// Correlation lengths of the Kriging part, if any.
    pub fn theta(&self) -> Option<Vec<f64>> {
        self.kriging().map(|k| k.correlation_lengths().to_vec())
    }
}

/// Fits a surrogate of the given family. `search` only affects the Kriging
/// based families.
pub fn fit_surrogate<R: Rng + ?Sized>(
    kind: SurrogateKind,
    ed: &ExperimentalDesign,
    rv: &RandomVector,
    cfg: &SurrogateConfig,
    search: HyperSearch,
    rng: &mut R,
) -> Result<SurrogateModel> {
    match kind {
        SurrogateKind::Kriging => Ok(SurrogateModel::Kriging(fit_universal_kriging(ed, Trend::Constant, &cfg.kriging, search, rng)?)),
        SurrogateKind::Pck => Ok(SurrogateModel::Pck(fit_pck_with(ed, rv, &cfg.pck, search, rng)?)),
        SurrogateKind::Pce => {
            let model = fit_pce_lars(ed, rv, &cfg.pce)?;
            let bootstrap = bootstrap_replicates(ed, rv, &model, cfg.bootstrap_replicates, rng)?;
            Ok(SurrogateModel::Pce { model, bootstrap })
        }
    }
}

/// Surrogate predictions remembered by evaluation order. Two estimator runs
/// with the same seed often draw the same points in the same order (crude
/// Monte Carlo always does); the second run then reuses the first run's
/// predictions. Each entry is keyed by the bits of its standard normal
/// coordinates, so diverging runs simply recompute.
#[derive(Debug, Clone, Default)]
pub struct PredictionMemory {
    entries: Vec<Memo>,
    cap: usize,
}

#[derive(Debug, Clone, Copy)]
struct Memo {
    key: u64,
    mean: f64,
    /// NaN when only the mean was needed.
    var: f64,
}

impl PredictionMemory {
    /// Remembers at most `cap` points.
    pub fn new(cap: usize) -> Self {
        Self { entries: Vec::new(), cap }
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn row_key(u: &[f64]) -> u64 {
    u.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| (h ^ v.to_bits()).wrapping_mul(0x0000_0100_0000_01b3))
}

/// `mu(x) + k sigma(x)` as a limit state.
pub struct SurrogateLimitState<'a> {
    model: &'a SurrogateModel,
    k_sigma: f64,
    scratch: PredictScratch,
    memory: Option<&'a mut PredictionMemory>,
    cursor: usize,
    means: Vec<f64>,
    vars: Vec<f64>,
    miss: Vec<usize>,
    gx: Vec<f64>,
    gu: Vec<f64>,
}

impl<'a> SurrogateLimitState<'a> {
    pub fn new(model: &'a SurrogateModel, k_sigma: f64) -> Self {
        Self {
            model,
            k_sigma,
            scratch: PredictScratch::default(),
            memory: None,
            cursor: 0,
            means: Vec::new(),
            vars: Vec::new(),
            miss: Vec::new(),
            gx: Vec::new(),
            gu: Vec::new(),
        }
    }

    /// Same limit state, reading and filling `memory` from its start.
    pub fn with_memory(model: &'a SurrogateModel, k_sigma: f64, memory: &'a mut PredictionMemory) -> Self {
        Self { memory: Some(memory), ..Self::new(model, k_sigma) }
    }

    fn predict(&mut self, u: &[f64], x: &[f64], dim: usize, rows: usize) {
        let (means, vars) = (&mut self.means[..rows], &mut self.vars[..rows]);
        if self.k_sigma == 0.0 {
            for (i, m) in means.iter_mut().enumerate() {
                *m = self.model.mean(&x[i * dim..(i + 1) * dim], &u[i * dim..(i + 1) * dim], &mut self.scratch);
            }
            vars.fill(f64::NAN);
        } else {
            self.model.mean_variance_rows(x, u, dim, means, vars, &mut self.scratch);
        }
    }
}

impl LimitState for SurrogateLimitState<'_> {
    fn eval_batch(&mut self, u: &[f64], x: &[f64], dim: usize, out: &mut [f64]) {
        let rows = out.len();
        self.means.resize(rows, 0.0);
        self.vars.resize(rows, 0.0);
        let Some(memory) = self.memory.take() else {
            self.predict(u, x, dim, rows);
            for (o, (m, v)) in out.iter_mut().zip(self.means.iter().zip(&self.vars)) {
                *o = if self.k_sigma == 0.0 { *m } else { m + self.k_sigma * libm::sqrt(*v) };
            }
            return;
        };
        let need_var = self.k_sigma != 0.0;
        let mut keys = Vec::with_capacity(rows);
        let mut hits = Vec::with_capacity(rows);
        self.miss.clear();
        for i in 0..rows {
            let key = row_key(&u[i * dim..(i + 1) * dim]);
            keys.push(key);
            match memory.entries.get(self.cursor + i) {
                Some(e) if e.key == key && (!need_var || !e.var.is_nan()) => hits.push((i, e.mean, e.var)),
                _ => self.miss.push(i),
            }
        }
        if !self.miss.is_empty() {
            self.gx.clear();
            self.gu.clear();
            for &i in &self.miss {
                self.gx.extend_from_slice(&x[i * dim..(i + 1) * dim]);
                self.gu.extend_from_slice(&u[i * dim..(i + 1) * dim]);
            }
            let (gu, gx) = (core::mem::take(&mut self.gu), core::mem::take(&mut self.gx));
            let n_miss = self.miss.len();
            self.predict(&gu, &gx, dim, n_miss);
            self.gu = gu;
            self.gx = gx;
            // scatter back, remembering as we go
            for j in (0..n_miss).rev() {
                let i = self.miss[j];
                let (m, v) = (self.means[j], self.vars[j]);
                let idx = self.cursor + i;
                let memo = Memo { key: keys[i], mean: m, var: v };
                if idx < memory.entries.len() {
                    memory.entries[idx] = memo;
                }
                self.means[i] = m;
                self.vars[i] = v;
            }
            for &i in &self.miss {
                let idx = self.cursor + i;
                if idx == memory.entries.len() && idx < memory.cap {
                    memory.entries.push(Memo { key: keys[i], mean: self.means[i], var: self.vars[i] });
                }
            }
        }
        for (i, m, v) in hits {
            self.means[i] = m;
            self.vars[i] = v;
        }
        self.cursor += rows;
        self.memory = Some(memory);
        for (o, (m, v)) in out.iter_mut().zip(self.means.iter().zip(&self.vars)) {
            *o = if self.k_sigma == 0.0 { *m } else { m + self.k_sigma * libm::sqrt(*v) };
        }
    }
}
