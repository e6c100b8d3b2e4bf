//! Benchmark problem registry. Analytic problems and the two tower problems
//! come with a built-in limit state; the remaining entries carry their
//! reference solution only and need an external definition to run.

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::input::{MarginalDistribution as D, RandomVector};
use crate::special::beta_from_pf;
use crate::truss::{demo_tower, TowerParameters, TrussModel};

pub type LimitStateFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Builtin,
    /// Reference solution only; definition supplied externally.
    Stub,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DimBucket {
    /// M < 20
    Low,
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaBucket {
    /// beta < 3.5
    Moderate,
    High,
}

#[derive(Clone)]
pub struct BenchmarkProblem {
    pub id: u32,
    pub name: String,
    pub dim: usize,
    pub input: Option<RandomVector>,
    pub lsf: Option<LimitStateFn>,
    pub pf_ref: f64,
    pub beta_ref: f64,
    pub origin: Origin,
    /// Key of the built-in limit state, if any.
    pub builtin: Option<String>,
}

impl core::fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("id", &self.id)
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("pf_ref", &self.pf_ref)
            .field("origin", &self.origin)
            .field("runnable", &self.is_runnable())
            .finish()
    }
}

impl BenchmarkProblem {
    fn stub(id: u32, name: &str, dim: usize, pf_ref: f64) -> Self {
        Self {
            id,
            name: name.to_string(),
            dim,
            input: None,
            lsf: None,
            pf_ref,
            beta_ref: beta_from_pf(pf_ref),
            origin: Origin::Stub,
            builtin: None,
        }
    }

    fn builtin(id: u32, name: &str, key: &str, pf_ref: f64) -> Self {
        let (input, lsf) = builtin_lsf(key).expect("registered key");
        Self {
            id,
            name: name.to_string(),
            dim: input.dim(),
            input: Some(input),
            lsf: Some(lsf),
            pf_ref,
            beta_ref: beta_from_pf(pf_ref),
            origin: Origin::Builtin,
            builtin: Some(key.to_string()),
        }
    }

    pub fn is_runnable(&self) -> bool {
        self.input.is_some() && self.lsf.is_some()
    }

    pub fn dim_bucket(&self) -> DimBucket {
        if self.dim < 20 {
            DimBucket::Low
        } else {
            DimBucket::High
        }
    }

    pub fn beta_bucket(&self) -> BetaBucket {
        if self.beta_ref < 3.5 {
            BetaBucket::Moderate
        } else {
            BetaBucket::High
        }
    }

    /// Attaches an input model and limit state.
    pub fn with_definition(mut self, input: RandomVector, lsf: LimitStateFn) -> Result<Self> {
        if input.dim() != self.dim {
            return Err(Error::InvalidConfig(alloc::format!(
                "problem {} has {} inputs but the definition has {}",
                self.id,
                self.dim,
                input.dim()
            )));
        }
        self.input = Some(input);
        self.lsf = Some(lsf);
        Ok(self)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let f = self.lsf.as_ref().ok_or(Error::MissingLimitState(self.id))?;
        Ok(f(x))
    }

    pub fn input(&self) -> Result<&RandomVector> {
        self.input.as_ref().ok_or(Error::MissingLimitState(self.id))
    }
}

/// Keys accepted by [`builtin_lsf`].
pub const BUILTIN_KEYS: [&str; 6] = ["four-branch", "hat", "damped-oscillator", "nonlinear-oscillator", "tower-displacement", "tower-stress"];

/// Series system with four branches, standard normal inputs.
pub fn four_branch(x: &[f64]) -> f64 {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = (x[0], x[1]);
    let q = 0.1 * (a - b) * (a - b);
    let k = 6.0;
    let g1 = 3.0 + q - (a + b) * s;
    let g2 = 3.0 + q + (a + b) * s;
    let g3 = (a - b) + k * s;
    let g4 = (b - a) + k * s;
    g1.min(g2).min(g3).min(g4)
}

pub fn hat(x: &[f64]) -> f64 {
    let d = x[0] - x[1];
    let s = x[0] + x[1] - 4.0;
    20.0 - d * d - 8.0 * s * s * s
}

/// Two-degree-of-freedom primary/secondary oscillator under white noise;
/// inputs `mp, ms, kp, ks, zeta_p, zeta_s, Fs, S0`.
pub fn damped_oscillator(x: &[f64]) -> f64 {
    let (mp, ms, kp, ks, zp, zs, fs, s0) = (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
    let wp = libm::sqrt(kp / mp);
    let ws = libm::sqrt(ks / ms);
    let gamma = ms / mp;
    let wa = 0.5 * (wp + ws);
    let za = 0.5 * (zp + zs);
    let theta = (wp - ws) / wa;
    let pi = core::f64::consts::PI;
    let msq = pi * s0 / (4.0 * zs * ws * ws * ws) * za * zs / (zp * zs * (4.0 * za * za + theta * theta) + gamma * za * za)
        * (zp * wp * wp * wp + zs * ws * ws * ws)
        * wp
        / (4.0 * za * wa * wa * wa * wa);
    fs - 3.0 * ks * libm::sqrt(msq)
}

/// Single-degree-of-freedom undamped oscillator under a rectangular pulse;
/// inputs `m, c1, c2, r, F1, t1`.
pub fn nonlinear_oscillator(x: &[f64]) -> f64 {
    let (m, c1, c2, r, f1, t1) = (x[0], x[1], x[2], x[3], x[4], x[5]);
    let w0 = libm::sqrt((c1 + c2) / m);
    3.0 * r - libm::fabs(2.0 * f1 / (m * w0 * w0) * libm::sin(0.5 * w0 * t1))
}

/// Tower parameters from the 11-input vector `A1..A4, E1..E4, F, P, alpha`.
pub fn tower_parameters_11(x: &[f64]) -> TowerParameters {
    TowerParameters {
        areas: [x[0], x[1], x[2], x[3]],
        moduli: [x[4], x[5], x[6], x[7]],
        tip_force: x[8],
        hand_load: x[9],
        angle_deg: x[10],
    }
}

/// Tower parameters from the 9-input vector `A1..A4, E, F, P, alpha, fy`.
pub fn tower_parameters_9(x: &[f64]) -> TowerParameters {
    TowerParameters { areas: [x[0], x[1], x[2], x[3]], moduli: [x[4]; 4], tip_force: x[5], hand_load: x[6], angle_deg: x[7] }
}

/// Allowed tip displacement of the tower (m).
pub const TOWER_DISPLACEMENT_LIMIT: f64 = 0.07;

fn tower_areas() -> Result<Vec<D>> {
    Ok(alloc::vec![D::gaussian_cov(1e-3, 0.05)?, D::gaussian_cov(1e-3, 0.05)?, D::gaussian_cov(5e-3, 0.05)?, D::gaussian_cov(5e-3, 0.05)?])
}

fn tower_loads() -> Result<Vec<D>> {
    Ok(alloc::vec![D::gumbel(3.5e4, 0.3)?, D::gumbel(1e4, 0.3)?, D::uniform(-30.0, 30.0)?])
}

/// Tower limit states on a given geometry.
pub fn tower_displacement_problem(model: TrussModel) -> Result<(RandomVector, LimitStateFn)> {
    model.validate()?;
    let mut m = tower_areas()?;
    for _ in 0..4 {
        m.push(D::gaussian_cov(210e9, 0.05)?);
    }
    m.extend(tower_loads()?);
    let model = Arc::new(model);
    let f: LimitStateFn = Arc::new(move |x: &[f64]| match model.tip_displacement(&tower_parameters_11(x)) {
        Ok(d) => TOWER_DISPLACEMENT_LIMIT - d,
        Err(_) => f64::NAN,
    });
    Ok((RandomVector::new(m)?, f))
}

pub fn tower_stress_problem(model: TrussModel) -> Result<(RandomVector, LimitStateFn)> {
    model.validate()?;
    let mut m = tower_areas()?;
    m.push(D::gaussian_cov(210e9, 0.05)?);
    m.extend(tower_loads()?);
    m.push(D::lognormal(355e6, 0.2)?);
    let model = Arc::new(model);
    let f: LimitStateFn = Arc::new(move |x: &[f64]| match model.max_stress(&tower_parameters_9(x)) {
        Ok(s) => x[8] - s,
        Err(_) => f64::NAN,
    });
    Ok((RandomVector::new(m)?, f))
}

/// Input model and limit state of a built-in problem.
pub fn builtin_lsf(key: &str) -> Option<(RandomVector, LimitStateFn)> {
    let build = || -> Result<(RandomVector, LimitStateFn)> {
        Ok(match key {
            "four-branch" => (RandomVector::standard_normal(2)?, Arc::new(four_branch) as LimitStateFn),
            "hat" => (RandomVector::standard_normal(2)?, Arc::new(hat) as LimitStateFn),
            "damped-oscillator" => (
                RandomVector::new(alloc::vec![
                    D::lognormal(1.5, 0.1)?,
                    D::lognormal(0.01, 0.1)?,
                    D::lognormal(1.0, 0.2)?,
                    D::lognormal(0.01, 0.2)?,
                    D::lognormal(0.05, 0.4)?,
                    D::lognormal(0.02, 0.5)?,
                    D::lognormal(15.0, 0.1)?,
                    D::lognormal(100.0, 0.1)?,
                ])?,
                Arc::new(damped_oscillator) as LimitStateFn,
            ),
            "nonlinear-oscillator" => (
                RandomVector::new(alloc::vec![
                    D::gaussian(1.0, 0.05)?,
                    D::gaussian(1.0, 0.1)?,
                    D::gaussian(0.1, 0.01)?,
                    D::gaussian(0.5, 0.05)?,
                    D::gaussian(0.45, 0.075)?,
                    D::gaussian(1.0, 0.2)?,
                ])?,
                Arc::new(nonlinear_oscillator) as LimitStateFn,
            ),
            "tower-displacement" => tower_displacement_problem(demo_tower())?,
            "tower-stress" => tower_stress_problem(demo_tower())?,
            _ => return Err(Error::InvalidConfig(key.to_string())),
        })
    };
    build().ok()
}

/// All registered problems ordered by id. Problem 17 is not registered.
pub fn registry() -> Vec<BenchmarkProblem> {
    let stubs: [(u32, &str, usize, f64); 13] = [
        (1, "RP14", 5, 7.69e-4),
        (2, "RP24", 2, 2.90e-3),
        (3, "RP28", 2, 1.31e-7),
        (4, "RP31", 2, 3.20e-3),
        (5, "RP38", 7, 8.20e-3),
        (6, "RP53", 2, 3.14e-2),
        (7, "RP54", 20, 9.79e-4),
        (8, "RP63", 100, 3.77e-4),
        (9, "RP75", 2, 9.80e-3),
        (10, "RP107", 10, 2.85e-7),
        (11, "RP111", 2, 7.83e-7),
        (16, "frame", 21, 2.25e-4),
        (18, "VNL", 40, 1.40e-3),
    ];
    let mut out: Vec<BenchmarkProblem> = stubs.iter().map(|(id, n, d, p)| BenchmarkProblem::stub(*id, n, *d, *p)).collect();
    out.push(BenchmarkProblem::builtin(12, "four-branch", "four-branch", 3.85e-4));
    out.push(BenchmarkProblem::builtin(13, "hat", "hat", 4.40e-3));
    out.push(BenchmarkProblem::builtin(14, "damped-oscillator", "damped-oscillator", 4.80e-3));
    out.push(BenchmarkProblem::builtin(15, "nonlinear-oscillator", "nonlinear-oscillator", 3.47e-7));
    out.push(BenchmarkProblem::builtin(19, "tower-displacement", "tower-displacement", 5.76e-4));
    out.push(BenchmarkProblem::builtin(20, "tower-stress", "tower-stress", 6.27e-4));
    out.sort_by_key(|p| p.id);
    out
}

pub fn problem(id: u32) -> Option<BenchmarkProblem> {
    registry().into_iter().find(|p| p.id == id)
}
