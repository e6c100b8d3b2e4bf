//! Gaussian-process (Kriging) surrogate with an anisotropic Gaussian kernel
//! on standardized inputs. Ordinary Kriging uses a constant trend; the
//! universal form takes a polynomial trend in standard normal space and is
//! what PC-Kriging builds on.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::{column_moments, ExperimentalDesign};
use crate::error::{Error, Result};
use crate::input::RandomVector;
use crate::linalg::{cholesky_in_place, condition_number, dot, solve_lower, solve_lower_transpose};
use crate::optim::{differential_evolution, nelder_mead, DeConfig};
use crate::pce::{MultiIndex, SparseBasis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KrigingConfig {
    /// Box for every correlation length, in standardized units.
    pub theta_lower: f64,
    pub theta_upper: f64,
    pub de: DeConfig,
    pub polish_max_evals: usize,
    pub polish_tol: f64,
    pub nugget: f64,
    pub max_nugget: f64,
}

impl Default for KrigingConfig {
    fn default() -> Self {
        Self {
            theta_lower: 1e-3,
            theta_upper: 1e2,
            de: DeConfig::default(),
            polish_max_evals: 300,
            polish_tol: 1e-9,
            nugget: 1e-10,
            max_nugget: 1e-6,
        }
    }
}

impl KrigingConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.theta_lower > 0.0
            && self.theta_upper > self.theta_lower
            && self.nugget > 0.0
            && self.max_nugget >= self.nugget
            && self.de.population >= 4;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig("kriging configuration out of range".into()))
        }
    }
}

/// How the correlation lengths are searched.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperSearch {
    /// Population search over the whole box, then a simplex polish. A warm
    /// start, if given, is seeded into the initial population.
    Global { warm_start: Option<Vec<f64>> },
    /// Simplex polish only, starting from the given lengths.
    Local { start: Vec<f64> },
    /// No optimization.
    Fixed { theta: Vec<f64> },
}

/// Regression part `f(x)` of the process mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Trend {
    Constant,
    /// Orthonormal Hermite polynomials evaluated at the isoprobabilistic
    /// image of `x`.
    Polynomial { basis: Vec<MultiIndex>, input: RandomVector },
}

impl Trend {
    pub fn len(&self) -> usize {
        match self {
            Trend::Constant => 1,
            Trend::Polynomial { basis, .. } => basis.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TrendEval {
    Constant,
    Polynomial { sparse: SparseBasis, input: RandomVector },
}

impl TrendEval {
    fn new(trend: &Trend) -> Self {
        match trend {
            Trend::Constant => TrendEval::Constant,
            Trend::Polynomial { basis, input } => {
                TrendEval::Polynomial { sparse: SparseBasis::new(basis), input: input.clone() }
            }
        }
    }

    fn needs_u(&self) -> bool {
        matches!(self, TrendEval::Polynomial { .. })
    }

    /// Fills `out` with `f(x)`; `u` must be the standard normal image of `x`
    /// when the trend is polynomial.
    fn eval(&self, u: &[f64], table: &mut Vec<f64>, out: &mut [f64]) {
        match self {
            TrendEval::Constant => out[0] = 1.0,
            TrendEval::Polynomial { sparse, .. } => sparse.eval_into(u, table, out),
        }
    }
}

/// Quantities that depend on the correlation lengths.
#[derive(Debug, Clone)]
struct Fitted {
    nugget: f64,
    chol: Vec<f64>,
    /// `L^{-1} F`, row-major `n x k`.
    ft: Vec<f64>,
    /// Cholesky factor of `Ft^T Ft`.
    q_chol: Vec<f64>,
    beta: Vec<f64>,
    sigma2: f64,
    /// `R^{-1} (y - F beta)`.
    gamma: Vec<f64>,
    log_likelihood: f64,
}

struct Problem<'a> {
    xs: &'a [f64],
    n: usize,
    m: usize,
    f: &'a [f64],
    k: usize,
    y: &'a [f64],
}

fn scaled_rows(xs: &[f64], m: usize, theta: &[f64]) -> Vec<f64> {
    let mut z = xs.to_vec();
    for row in z.chunks_mut(m) {
        for (v, t) in row.iter_mut().zip(theta) {
            *v /= t;
        }
    }
    z
}

fn correlation(z: &[f64], n: usize, m: usize, nugget: f64) -> Vec<f64> {
    let mut r = alloc::vec![0.0; n * n];
    for i in 0..n {
        let zi = &z[i * m..(i + 1) * m];
        for j in 0..i {
            let zj = &z[j * m..(j + 1) * m];
            let mut d2 = 0.0;
            for (a, b) in zi.iter().zip(zj) {
                d2 += (a - b) * (a - b);
            }
            r[i * n + j] = libm::exp(-0.5 * d2);
        }
        r[i * n + i] = 1.0 + nugget;
    }
    r
}

/// Factorizes `R(theta) + nugget I`, escalating the nugget tenfold on
/// failure. Returns the factor and the nugget used.
fn factorize(p: &Problem, theta: &[f64], nugget: f64, max_nugget: f64) -> core::result::Result<(Vec<f64>, f64), (f64, f64)> {
    let z = scaled_rows(p.xs, p.m, theta);
    let mut nug = nugget;
    loop {
        let mut r = correlation(&z, p.n, p.m, nug);
        if cholesky_in_place(&mut r, p.n) {
            return Ok((r, nug));
        }
        if nug * 10.0 > max_nugget * (1.0 + 1e-9) {
            let mut full = correlation(&z, p.n, p.m, nug);
            for i in 0..p.n {
                for j in 0..i {
                    full[j * p.n + i] = full[i * p.n + j];
                }
            }
            return Err((nug, condition_number(&full, p.n)));
        }
        nug *= 10.0;
    }
}

fn fit_theta(p: &Problem, theta: &[f64], cfg: &KrigingConfig) -> core::result::Result<Fitted, (f64, f64)> {
    let (n, k) = (p.n, p.k);
    let (chol, nugget) = factorize(p, theta, cfg.nugget, cfg.max_nugget)?;
    let mut ft = alloc::vec![0.0; n * k];
    let mut col = alloc::vec![0.0; n];
    for c in 0..k {
        for r in 0..n {
            col[r] = p.f[r * k + c];
        }
        solve_lower(&chol, n, &mut col);
        for r in 0..n {
            ft[r * k + c] = col[r];
        }
    }
    let mut yt = p.y.to_vec();
    solve_lower(&chol, n, &mut yt);
    let mut q = alloc::vec![0.0; k * k];
    let mut rhs = alloc::vec![0.0; k];
    for r in 0..n {
        let row = &ft[r * k..(r + 1) * k];
        for i in 0..k {
            rhs[i] += row[i] * yt[r];
            for j in 0..=i {
                q[i * k + j] += row[i] * row[j];
            }
        }
    }
    if !cholesky_in_place(&mut q, k) {
        return Err((nugget, f64::INFINITY));
    }
    let mut beta = rhs;
    solve_lower(&q, k, &mut beta);
    solve_lower_transpose(&q, k, &mut beta);
    let mut resid = yt;
    for r in 0..n {
        resid[r] -= dot(&ft[r * k..(r + 1) * k], &beta);
    }
    let sigma2 = dot(&resid, &resid) / n as f64;
    let log_det: f64 = (0..n).map(|i| 2.0 * libm::log(chol[i * n + i])).sum();
    let log_likelihood = -0.5 * (n as f64 * libm::log(sigma2.max(1e-300)) + log_det);
    let mut gamma = resid;
    solve_lower_transpose(&chol, n, &mut gamma);
    Ok(Fitted { nugget, chol, ft, q_chol: q, beta, sigma2, gamma, log_likelihood })
}

/// A fitted Kriging model. Immutable; prediction methods take `&self`.
#[derive(Debug, Clone)]
pub struct KrigingModel {
    dim: usize,
    n: usize,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    theta: Vec<f64>,
    /// Training inputs standardized and divided by `theta`, row-major.
    z: Vec<f64>,
    trend: Trend,
    trend_eval: TrendEval,
    fitted: Fitted,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
}

/// JSON-friendly snapshot of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KrigingDump {
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
    pub nugget: f64,
    pub log_likelihood: f64,
    pub trend: Trend,
    pub inputs: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
}

/// Reusable buffers for repeated predictions.
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    zx: Vec<f64>,
    r: Vec<f64>,
    f: Vec<f64>,
    u: Vec<f64>,
    table: Vec<f64>,
    ux: Vec<f64>,
    block: Vec<f64>,
}

/// Points per block in [`KrigingModel::predict_rows`].
const BLOCK: usize = 8;

fn trend_matrix(trend: &TrendEval, ed: &ExperimentalDesign) -> Result<(Vec<f64>, usize)> {
    let k = match trend {
        TrendEval::Constant => 1,
        TrendEval::Polynomial { sparse, .. } => sparse.len(),
    };
    let n = ed.len();
    let mut f = alloc::vec![0.0; n * k];
    let mut table = Vec::new();
    let mut u = alloc::vec![0.0; ed.dim()];
    for (row, x) in f.chunks_mut(k).zip(ed.inputs()) {
        if let TrendEval::Polynomial { input, .. } = trend {
            input.to_standard_normal_into(x, &mut u)?;
        }
        trend.eval(&u, &mut table, row);
    }
    Ok((f, k))
}

/// Concentrated log-likelihood at the given correlation lengths, or `None`
/// when the correlation matrix cannot be factorized.
pub fn concentrated_log_likelihood(ed: &ExperimentalDesign, trend: &Trend, theta: &[f64], cfg: &KrigingConfig) -> Result<Option<f64>> {
    let (mean, scale) = column_moments(ed.inputs());
    let xs = standardize(ed.inputs(), &mean, &scale);
    let te = TrendEval::new(trend);
    let (f, k) = trend_matrix(&te, ed)?;
    let p = Problem { xs: &xs, n: ed.len(), m: ed.dim(), f: &f, k, y: ed.outputs() };
    Ok(fit_theta(&p, theta, cfg).ok().map(|f| f.log_likelihood))
}

fn standardize(rows: &[Vec<f64>], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    rows.iter().flat_map(|r| r.iter().zip(mean).zip(scale).map(|((v, mu), s)| (v - mu) / s)).collect()
}

/// Ordinary Kriging with a global hyperparameter search.
pub fn fit_kriging<R: Rng + ?Sized>(ed: &ExperimentalDesign, cfg: &KrigingConfig, rng: &mut R) -> Result<KrigingModel> {
    fit_universal_kriging(ed, Trend::Constant, cfg, HyperSearch::Global { warm_start: None }, rng)
}

/// Kriging with an arbitrary trend and search strategy.
pub fn fit_universal_kriging<R: Rng + ?Sized>(
    ed: &ExperimentalDesign,
    trend: Trend,
    cfg: &KrigingConfig,
    search: HyperSearch,
    rng: &mut R,
) -> Result<KrigingModel> {
    cfg.validate()?;
    let n = ed.len();
    let m = ed.dim();
    if n < 2 {
        return Err(Error::Design("Kriging needs at least 2 points".into()));
    }
    if let Trend::Polynomial { basis, input } = &trend {
        if basis.is_empty() || input.dim() != m || basis.iter().any(|a| a.0.len() != m) {
            return Err(Error::InvalidConfig("trend basis does not match the input dimension".into()));
        }
        if basis.len() >= n {
            return Err(Error::Design("trend has as many terms as design points".into()));
        }
    }
    let (x_mean, x_scale) = column_moments(ed.inputs());
    let xs = standardize(ed.inputs(), &x_mean, &x_scale);
    let trend_eval = TrendEval::new(&trend);
    let (f, k) = trend_matrix(&trend_eval, ed)?;
    let y = ed.outputs();
    let p = Problem { xs: &xs, n, m, f: &f, k, y };

    let lo = alloc::vec![libm::log10(cfg.theta_lower); m];
    let hi = alloc::vec![libm::log10(cfg.theta_upper); m];
    let to_log = |t: &[f64]| -> Vec<f64> { t.iter().map(|v| libm::log10(*v)).collect() };
    let from_log = |l: &[f64]| -> Vec<f64> { l.iter().map(|v| libm::pow(10.0, *v)).collect() };
    let objective = |l: &[f64]| -> f64 {
        match fit_theta(&p, &from_log(l), cfg) {
            Ok(fit) => -fit.log_likelihood,
            Err(_) => f64::INFINITY,
        }
    };

    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let constant_y = y_max - y_min <= 1e-14 * (1.0 + y_max.abs());

    let log_theta = if constant_y {
        // any lengths interpolate a constant exactly; pick the box center
        alloc::vec![0.5 * (lo[0] + hi[0]); m]
    } else {
        match search {
            HyperSearch::Fixed { theta } => {
                if theta.len() != m {
                    return Err(Error::InvalidConfig("theta has the wrong dimension".into()));
                }
                to_log(&theta)
            }
            HyperSearch::Local { start } => {
                if start.len() != m {
                    return Err(Error::InvalidConfig("theta has the wrong dimension".into()));
                }
                nelder_mead(objective, &to_log(&start), &lo, &hi, 0.05, cfg.polish_max_evals, cfg.polish_tol).0
            }
            HyperSearch::Global { warm_start } => {
                let seeds: Vec<Vec<f64>> = warm_start.iter().filter(|t| t.len() == m).map(|t| to_log(t)).collect();
                let (best, _) = differential_evolution(objective, &lo, &hi, &cfg.de, &seeds, rng);
                nelder_mead(objective, &best, &lo, &hi, 0.05, cfg.polish_max_evals, cfg.polish_tol).0
            }
        }
    };
    let theta = from_log(&log_theta);
    let fitted = fit_theta(&p, &theta, cfg).map_err(|(nugget, condition)| Error::IllConditioned { nugget, condition })?;
    let mut fitted = fitted;
    if constant_y {
        fitted.sigma2 = 0.0;
        fitted.gamma.iter_mut().for_each(|g| *g = 0.0);
        fitted.beta.iter_mut().for_each(|b| *b = 0.0);
        // constant column carries the value; for polynomial trends the zero
        // multi-index is first and equals 1
        fitted.beta[0] = y[0];
    }
    let z = scaled_rows(&xs, m, &theta);
    Ok(KrigingModel {
        dim: m,
        n,
        x_mean,
        x_scale,
        theta,
        z,
        trend,
        trend_eval,
        fitted,
        inputs: ed.inputs().to_vec(),
        outputs: y.to_vec(),
    })
}

impl KrigingModel {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Correlation lengths in standardized units.
    pub fn correlation_lengths(&self) -> &[f64] {
        &self.theta
    }

    pub fn trend_coefficients(&self) -> &[f64] {
        &self.fitted.beta
    }

    pub fn process_variance(&self) -> f64 {
        self.fitted.sigma2
    }

    pub fn nugget(&self) -> f64 {
        self.fitted.nugget
    }

    pub fn log_likelihood(&self) -> f64 {
        self.fitted.log_likelihood
    }

    pub fn trend(&self) -> &Trend {
        &self.trend
    }

    /// Whether predictions need the standard normal image of the point.
    pub fn needs_standard_normal(&self) -> bool {
        self.trend_eval.needs_u()
    }

    pub fn dump(&self) -> KrigingDump {
        KrigingDump {
            theta: self.theta.clone(),
            beta: self.fitted.beta.clone(),
            sigma2: self.fitted.sigma2,
            nugget: self.fitted.nugget,
            log_likelihood: self.fitted.log_likelihood,
            trend: self.trend.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        }
    }

    fn prepare(&self, x: &[f64], u: Option<&[f64]>, s: &mut Scratch) {
        let (n, m) = (self.n, self.dim);
        s.zx.clear();
        s.zx.extend(x.iter().zip(&self.x_mean).zip(&self.x_scale).zip(&self.theta).map(|(((v, mu), sc), t)| (v - mu) / sc / t));
        s.r.resize(n, 0.0);
        for (ri, zi) in s.r.iter_mut().zip(self.z.chunks(m)) {
            let mut d2 = 0.0;
            for (a, b) in zi.iter().zip(&s.zx) {
                d2 += (a - b) * (a - b);
            }
            // zero lag carries the nugget so training points are reproduced exactly
            *ri = if d2 == 0.0 { 1.0 + self.fitted.nugget } else { libm::exp(-0.5 * d2) };
        }
        let k = self.fitted.beta.len();
        s.f.resize(k, 0.0);
        match (&self.trend_eval, u) {
            (TrendEval::Constant, _) => s.f[0] = 1.0,
            (TrendEval::Polynomial { .. }, Some(u)) => self.trend_eval.eval(u, &mut s.table, &mut s.f),
            (TrendEval::Polynomial { input, .. }, None) => {
                s.ux.resize(m, 0.0);
                // points outside the support map to the clamped tail
                let _ = input.to_standard_normal_into(x, &mut s.ux);
                let ux = core::mem::take(&mut s.ux);
                self.trend_eval.eval(&ux, &mut s.table, &mut s.f);
                s.ux = ux;
            }
        }
    }

    fn mean_prepared(&self, s: &Scratch) -> f64 {
        dot(&s.f, &self.fitted.beta) + dot(&s.r, &self.fitted.gamma)
    }

    fn variance_prepared(&self, s: &mut Scratch) -> f64 {
        if self.fitted.sigma2 == 0.0 {
            return 0.0;
        }
        let n = self.n;
        let k = self.fitted.beta.len();
        solve_lower(&self.fitted.chol, n, &mut s.r);
        let vv = dot(&s.r, &s.r);
        s.u.clear();
        s.u.resize(k, 0.0);
        for (row, v) in self.fitted.ft.chunks(k).zip(&s.r) {
            for (ui, fi) in s.u.iter_mut().zip(row) {
                *ui += fi * v;
            }
        }
        for (ui, fi) in s.u.iter_mut().zip(&s.f) {
            *ui -= fi;
        }
        solve_lower(&self.fitted.q_chol, k, &mut s.u);
        let uqu = dot(&s.u, &s.u);
        (self.fitted.sigma2 * (1.0 - vv + uqu)).max(0.0)
    }

    /// Predictive mean at a physical point.
    pub fn mean(&self, x: &[f64]) -> f64 {
        let mut s = Scratch::default();
        self.prepare(x, None, &mut s);
        self.mean_prepared(&s)
    }

    /// Predictive variance at a physical point, clamped at zero.
    pub fn variance(&self, x: &[f64]) -> f64 {
        self.predict(x).1
    }

    /// Mean and variance at a physical point.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let mut s = Scratch::default();
        self.predict_with(x, None, &mut s)
    }

    /// Mean and variance reusing buffers; `u` may carry the standard normal
    /// image of `x` to skip the transform for polynomial trends.
    pub fn predict_with(&self, x: &[f64], u: Option<&[f64]>, s: &mut Scratch) -> (f64, f64) {
        self.prepare(x, u, s);
        let mean = self.mean_prepared(s);
        (mean, self.variance_prepared(s))
    }

    /// Mean only, reusing buffers.
    pub fn mean_with(&self, x: &[f64], u: Option<&[f64]>, s: &mut Scratch) -> f64 {
        self.prepare(x, u, s);
        self.mean_prepared(s)
    }

    /// Mean and variance of `means.len()` row-major points. Same numbers as
    /// [`Self::predict_with`], but the triangular solves run on blocks of
    /// points so the inner loop vectorizes.
    pub fn predict_rows(&self, x: &[f64], u: Option<&[f64]>, means: &mut [f64], vars: &mut [f64], s: &mut Scratch) {
        let (n, m, k) = (self.n, self.dim, self.fitted.beta.len());
        let rows = means.len();
        for start in (0..rows).step_by(BLOCK) {
            let b = BLOCK.min(rows - start);
            // block[j * BLOCK + p] holds r_j of point p, later (L^-1 r)_j
            let mut block = core::mem::take(&mut s.block);
            block.clear();
            block.resize(n * BLOCK + k * BLOCK, 0.0);
            let (rb, fb) = block.split_at_mut(n * BLOCK);
            for p in 0..b {
                let i = start + p;
                self.prepare(&x[i * m..(i + 1) * m], u.map(|u| &u[i * m..(i + 1) * m]), s);
                means[i] = self.mean_prepared(s);
                for (j, r) in s.r.iter().enumerate() {
                    rb[j * BLOCK + p] = *r;
                }
                fb[p * k..(p + 1) * k].copy_from_slice(&s.f);
            }
            if self.fitted.sigma2 == 0.0 {
                vars[start..start + b].fill(0.0);
                s.block = block;
                continue;
            }
            let chol = &self.fitted.chol;
            for i in 0..n {
                let mut acc = [0.0; BLOCK];
                acc.copy_from_slice(&rb[i * BLOCK..(i + 1) * BLOCK]);
                for (j, lj) in chol[i * n..i * n + i].iter().enumerate() {
                    let vj = &rb[j * BLOCK..(j + 1) * BLOCK];
                    for p in 0..BLOCK {
                        acc[p] -= lj * vj[p];
                    }
                }
                let d = chol[i * n + i];
                for p in 0..BLOCK {
                    rb[i * BLOCK + p] = acc[p] / d;
                }
            }
            for p in 0..b {
                let vv: f64 = (0..n).map(|i| rb[i * BLOCK + p] * rb[i * BLOCK + p]).sum();
                s.u.clear();
                s.u.resize(k, 0.0);
                for (i, row) in self.fitted.ft.chunks(k).enumerate() {
                    let v = rb[i * BLOCK + p];
                    for (ui, fi) in s.u.iter_mut().zip(row) {
                        *ui += fi * v;
                    }
                }
                for (ui, fi) in s.u.iter_mut().zip(&fb[p * k..(p + 1) * k]) {
                    *ui -= fi;
                }
                solve_lower(&self.fitted.q_chol, k, &mut s.u);
                let uqu = dot(&s.u, &s.u);
                vars[start + p] = (self.fitted.sigma2 * (1.0 - vv + uqu)).max(0.0);
            }
            s.block = block;
        }
    }

    pub fn mean_batch(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        let mut s = Scratch::default();
        xs.iter().map(|x| self.mean_with(x, None, &mut s)).collect()
    }

    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Vec<(f64, f64)> {
        let mut s = Scratch::default();
        xs.iter().map(|x| self.predict_with(x, None, &mut s)).collect()
    }
}
