//! PC-Kriging: a universal Kriging model whose trend is the sparse PCE basis
//! picked by least-angle regression, calibrated in two sequential stages.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::ExperimentalDesign;
use crate::error::Result;
use crate::input::RandomVector;
use crate::kriging::{fit_universal_kriging, HyperSearch, KrigingConfig, KrigingModel, Trend};
use crate::pce::{fit_pce_lars, MultiIndex, PceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PckConfig {
    /// Trend selection settings; the degree is capped at 3 by default.
    pub pce: PceConfig,
    pub kriging: KrigingConfig,
}

impl Default for PckConfig {
    fn default() -> Self {
        Self { pce: PceConfig { max_degree: 3, ..PceConfig::default() }, kriging: KrigingConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct PckModel {
    pub trend_basis: Vec<MultiIndex>,
    pub kriging: KrigingModel,
}

impl PckModel {
    pub fn mean(&self, x: &[f64]) -> f64 {
        self.kriging.mean(x)
    }

    pub fn variance(&self, x: &[f64]) -> f64 {
        self.kriging.variance(x)
    }

    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        self.kriging.predict(x)
    }
}

pub fn fit_pck<R: Rng + ?Sized>(ed: &ExperimentalDesign, rv: &RandomVector, cfg: &PckConfig, rng: &mut R) -> Result<PckModel> {
    fit_pck_with(ed, rv, cfg, HyperSearch::Global { warm_start: None }, rng)
}

/// Same as [`fit_pck`] with an explicit correlation-length search.
pub fn fit_pck_with<R: Rng + ?Sized>(
    ed: &ExperimentalDesign,
    rv: &RandomVector,
    cfg: &PckConfig,
    search: HyperSearch,
    rng: &mut R,
) -> Result<PckModel> {
    let pce = fit_pce_lars(ed, rv, &cfg.pce)?;
    let mut trend_basis = pce.basis;
    // keep at least one residual degree of freedom for the process variance
    trend_basis.truncate(ed.len().saturating_sub(1).max(1));
    let trend = Trend::Polynomial { basis: trend_basis.clone(), input: rv.clone() };
    let kriging = fit_universal_kriging(ed, trend, &cfg.kriging, search, rng)?;
    Ok(PckModel { trend_basis, kriging })
}
