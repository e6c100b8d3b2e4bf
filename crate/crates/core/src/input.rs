//! Probabilistic input model: independent marginals, the componentwise
//! isoprobabilistic transform to standard normal space, and Latin hypercube
//! sampling.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_inv_cdf, norm_pdf, norm_sf};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// CDF values are kept this far away from 0 and 1 before inversion.
pub const CDF_CLAMP: f64 = 1e-16;

/// A univariate marginal in its canonical parameterization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MarginalDistribution {
    Gaussian { mean: f64, std: f64 },
    /// `ln X ~ N(lambda, zeta^2)`.
    Lognormal { lambda: f64, zeta: f64 },
    /// Type-I largest value distribution.
    Gumbel { loc: f64, scale: f64 },
    Uniform { lower: f64, upper: f64 },
}

use MarginalDistribution::*;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameters(format!("{name} must be positive, got {v}")))
    }
}

impl MarginalDistribution {
    pub fn gaussian(mean: f64, std: f64) -> Result<Self> {
        positive("standard deviation", std)?;
        Ok(Gaussian { mean, std })
    }

    /// Gaussian from mean and coefficient of variation.
    pub fn gaussian_cov(mean: f64, cov: f64) -> Result<Self> {
        Self::gaussian(mean, (cov * mean).abs())
    }

    pub fn lognormal(mean: f64, cov: f64) -> Result<Self> {
        positive("lognormal mean", mean)?;
        positive("coefficient of variation", cov)?;
        let zeta2 = libm::log1p(cov * cov);
        Ok(Lognormal { lambda: libm::log(mean) - 0.5 * zeta2, zeta: libm::sqrt(zeta2) })
    }

    /// Gumbel (maximum) from its moments: `mean = loc + gamma * scale`,
    /// `std = pi * scale / sqrt(6)`.
    pub fn gumbel(mean: f64, cov: f64) -> Result<Self> {
        let std = (cov * mean).abs();
        positive("standard deviation", std)?;
        let scale = std * libm::sqrt(6.0) / PI;
        Ok(Gumbel { loc: mean - EULER_GAMMA * scale, scale })
    }

    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidParameters(format!("uniform bounds [{lower}, {upper}]")));
        }
        Ok(Uniform { lower, upper })
    }

    /// Checks the invariants of a deserialized or hand-built value.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Gaussian { std, .. } => positive("standard deviation", std),
            Lognormal { zeta, .. } => positive("zeta", zeta),
            Gumbel { scale, .. } => positive("scale", scale),
            Uniform { lower, upper } => Self::uniform(lower, upper).map(|_| ()),
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            Gaussian { .. } => "gaussian",
            Lognormal { .. } => "lognormal",
            Gumbel { .. } => "gumbel",
            Uniform { .. } => "uniform",
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Gaussian { mean, .. } => mean,
            Lognormal { lambda, zeta } => libm::exp(lambda + 0.5 * zeta * zeta),
            Gumbel { loc, scale } => loc + EULER_GAMMA * scale,
            Uniform { lower, upper } => 0.5 * (lower + upper),
        }
    }

    pub fn std(&self) -> f64 {
        match *self {
            Gaussian { std, .. } => std,
            Lognormal { zeta, .. } => self.mean() * libm::sqrt(libm::expm1(zeta * zeta)),
            Gumbel { scale, .. } => PI * scale / libm::sqrt(6.0),
            Uniform { lower, upper } => (upper - lower) / libm::sqrt(12.0),
        }
    }

    pub fn cov(&self) -> f64 {
        self.std() / self.mean().abs()
    }

    pub fn in_support(&self, x: f64) -> bool {
        match *self {
            Gaussian { .. } | Gumbel { .. } => x.is_finite(),
            Lognormal { .. } => x.is_finite() && x > 0.0,
            Uniform { lower, upper } => x >= lower && x <= upper,
        }
    }

    fn check(&self, x: f64) -> Result<()> {
        if self.in_support(x) {
            Ok(())
        } else {
            Err(Error::OutsideSupport { family: self.family(), value: x })
        }
    }

    /// Density; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        if !self.in_support(x) {
            return 0.0;
        }
        match *self {
            Gaussian { mean, std } => norm_pdf((x - mean) / std) / std,
            Lognormal { lambda, zeta } => norm_pdf((libm::log(x) - lambda) / zeta) / (zeta * x),
            Gumbel { loc, scale } => {
                let z = (x - loc) / scale;
                libm::exp(-z - libm::exp(-z)) / scale
            }
            Uniform { lower, upper } => 1.0 / (upper - lower),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match *self {
            Gaussian { mean, std } => norm_cdf((x - mean) / std),
            Lognormal { lambda, zeta } => norm_cdf((libm::log(x) - lambda) / zeta),
            Gumbel { loc, scale } => libm::exp(-libm::exp(-(x - loc) / scale)),
            Uniform { lower, upper } => (x - lower) / (upper - lower),
        })
    }

    /// Survival function `1 - F(x)`, computed without cancellation where the
    /// family allows it.
    pub fn sf(&self, x: f64) -> Result<f64> {
        self.check(x)?;
        Ok(match *self {
            Gaussian { mean, std } => norm_sf((x - mean) / std),
            Lognormal { lambda, zeta } => norm_sf((libm::log(x) - lambda) / zeta),
            Gumbel { loc, scale } => -libm::expm1(-libm::exp(-(x - loc) / scale)),
            Uniform { lower, upper } => (upper - x) / (upper - lower),
        })
    }

    pub fn inv_cdf(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(match *self {
            Gaussian { mean, std } => mean + std * norm_inv_cdf(p),
            Lognormal { lambda, zeta } => libm::exp(lambda + zeta * norm_inv_cdf(p)),
            Gumbel { loc, scale } => loc - scale * libm::log(-libm::log(p)),
            Uniform { lower, upper } => lower + p * (upper - lower),
        })
    }

    /// `u = Phi^{-1}(F(x))`. The flag reports that the CDF had to be clamped
    /// into `[1e-16, 1 - 1e-16]`.
    pub fn to_standard_normal(&self, x: f64) -> Result<(f64, bool)> {
        self.check(x)?;
        match *self {
            Gaussian { mean, std } => return Ok(((x - mean) / std, false)),
            Lognormal { lambda, zeta } => return Ok(((libm::log(x) - lambda) / zeta, false)),
            _ => {}
        }
        let p = self.cdf(x)?;
        if p <= 0.5 {
            let clamped = p < CDF_CLAMP;
            Ok((norm_inv_cdf(p.max(CDF_CLAMP)), clamped))
        } else {
            let q = self.sf(x)?;
            let clamped = q < CDF_CLAMP;
            Ok((-norm_inv_cdf(q.max(CDF_CLAMP)), clamped))
        }
    }

    /// `x = F^{-1}(Phi(u))`.
    pub fn from_standard_normal(&self, u: f64) -> f64 {
        match *self {
            Gaussian { mean, std } => mean + std * u,
            Lognormal { lambda, zeta } => libm::exp(lambda + zeta * u),
            Gumbel { loc, scale } => {
                if u <= 0.0 {
                    loc - scale * libm::log(-libm::log(norm_cdf(u)))
                } else {
                    // -ln(p) = -ln(1 - q) = -log1p(-q)
                    loc - scale * libm::log(-libm::log1p(-norm_sf(u)))
                }
            }
            Uniform { lower, upper } => {
                if u <= 0.0 {
                    lower + (upper - lower) * norm_cdf(u)
                } else {
                    upper - (upper - lower) * norm_sf(u)
                }
            }
        }
    }
}

/// An ordered vector of independent marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomVector {
    marginals: Vec<MarginalDistribution>,
}

impl RandomVector {
    pub fn new(marginals: Vec<MarginalDistribution>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidParameters("random vector needs at least one marginal".into()));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(Self { marginals })
    }

    /// `dim` independent standard normal variables.
    pub fn standard_normal(dim: usize) -> Result<Self> {
        Self::new(alloc::vec![Gaussian { mean: 0.0, std: 1.0 }; dim])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[MarginalDistribution] {
        &self.marginals
    }

    /// Returns the transformed point and whether any coordinate was clamped.
    pub fn to_standard_normal(&self, x: &[f64]) -> Result<(Vec<f64>, bool)> {
        let mut out = alloc::vec![0.0; self.dim()];
        let clamped = self.to_standard_normal_into(x, &mut out)?;
        Ok((out, clamped))
    }

    pub fn to_standard_normal_into(&self, x: &[f64], out: &mut [f64]) -> Result<bool> {
        debug_assert_eq!(x.len(), self.dim());
        let mut clamped = false;
        for ((m, &xi), o) in self.marginals.iter().zip(x).zip(out.iter_mut()) {
            let (u, c) = m.to_standard_normal(xi)?;
            *o = u;
            clamped |= c;
        }
        Ok(clamped)
    }

    pub fn from_standard_normal(&self, u: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim()];
        self.from_standard_normal_into(u, &mut out);
        out
    }

    pub fn from_standard_normal_into(&self, u: &[f64], out: &mut [f64]) {
        debug_assert_eq!(u.len(), self.dim());
        for ((m, &ui), o) in self.marginals.iter().zip(u).zip(out.iter_mut()) {
            *o = m.from_standard_normal(ui);
        }
    }

    /// True when every marginal is a standard normal, so the transform is
    /// the identity.
    pub fn is_standard_normal(&self) -> bool {
        self.marginals
            .iter()
            .all(|m| matches!(m, Gaussian { mean, std } if *mean == 0.0 && *std == 1.0))
    }

    pub fn means(&self) -> Vec<f64> {
        self.marginals.iter().map(|m| m.mean()).collect()
    }
}

/// Latin hypercube sample of `n` physical-space points: in every dimension
/// each of the `n` equiprobable strata holds exactly one point.
pub fn lhs_sample<R: Rng + ?Sized>(n: usize, rv: &RandomVector, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::InvalidConfig("LHS sample size must be at least 1".into()));
    }
    let m = rv.dim();
    let mut out = alloc::vec![alloc::vec![0.0; m]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for (j, marg) in rv.marginals().iter().enumerate() {
        perm.shuffle(rng);
        for (i, &stratum) in perm.iter().enumerate() {
            // strictly inside the stratum, never exactly 0 or 1
            let mut jitter: f64 = rng.random();
            if jitter == 0.0 {
                jitter = 0.5;
            }
            let p = (stratum as f64 + jitter) / n as f64;
            out[i][j] = marg.inv_cdf(p.min(1.0 - f64::EPSILON))?;
        }
    }
    Ok(out)
}
