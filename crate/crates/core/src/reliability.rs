//! Simulation-based failure-probability estimators working in standard
//! normal space: crude Monte Carlo, FORM-centred importance sampling and
//! subset simulation. Every solver archives the samples it evaluated so the
//! active-learning loop can reuse them as enrichment candidates.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::input::RandomVector;
use crate::rng::Stream;
use crate::special::beta_from_pf;

/// A limit state evaluated on batches of points given both in standard
/// normal space (`u`) and physical space (`x`), row-major with `dim`
/// columns. `g <= 0` is failure.
pub trait LimitState {
    fn eval_batch(&mut self, u: &[f64], x: &[f64], dim: usize, out: &mut [f64]);
}

/// Adapter for a pointwise function of the physical inputs.
pub struct PhysicalFn<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> LimitState for PhysicalFn<F> {
    fn eval_batch(&mut self, _u: &[f64], x: &[f64], dim: usize, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(x.chunks(dim)) {
            *o = (self.0)(p);
        }
    }
}

/// Adapter for a pointwise function of the standard normal coordinates.
pub struct StandardFn<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> LimitState for StandardFn<F> {
    fn eval_batch(&mut self, u: &[f64], _x: &[f64], dim: usize, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(u.chunks(dim)) {
            *o = (self.0)(p);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "MCS")]
    Mcs,
    #[serde(rename = "IS")]
    Is,
    #[serde(rename = "SuS")]
    Sus,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Mcs, Estimator::Is, Estimator::Sus];

    pub fn code(self) -> &'static str {
        match self {
            Estimator::Mcs => "MCS",
            Estimator::Is => "IS",
            Estimator::Sus => "SuS",
        }
    }

    pub fn from_code(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.code().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsConfig {
    pub batch_size: usize,
    pub target_cov: f64,
    pub max_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsConfig {
    pub n_samples: usize,
    /// Size of the crude Monte Carlo pilot used when FORM fails.
    pub pilot_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SusConfig {
    pub batch_per_level: usize,
    pub p0: f64,
    pub max_levels: usize,
    /// Half-width of the uniform component proposal.
    pub proposal_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Relative finite-difference step, scaled by `1 + |u_i|`.
    pub step: f64,
}

impl Default for FormConfig {
    fn default() -> Self {
        Self { max_iterations: 100, tolerance: 1e-6, step: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverMode {
    Standard,
    Desk,
    Overkill,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub mode: SolverMode,
    pub mcs: McsConfig,
    pub is: IsConfig,
    pub sus: SusConfig,
    pub form: FormConfig,
    /// Keep at most this many archived samples (uniform reservoir); `None`
    /// keeps everything.
    pub archive_cap: Option<usize>,
}

impl SolverConfig {
    pub fn overkill() -> Self {
        Self {
            mode: SolverMode::Overkill,
            mcs: McsConfig { batch_size: 100_000, target_cov: 0.025, max_samples: 10_000_000 },
            is: IsConfig { n_samples: 10_000, pilot_samples: 1000 },
            sus: SusConfig { batch_per_level: 100_000, p0: 0.25, max_levels: 30, proposal_width: 1.0 },
            form: FormConfig::default(),
            archive_cap: None,
        }
    }

    /// Overkill sample sizes divided by ten.
    pub fn desk() -> Self {
        let mut c = Self::overkill();
        c.mode = SolverMode::Desk;
        c.mcs.batch_size /= 10;
        c.mcs.max_samples /= 10;
        c.is.n_samples /= 10;
        c.sus.batch_per_level /= 10;
        c
    }

    /// Plain settings used for surrogate-free baselines.
    pub fn standard() -> Self {
        Self {
            mode: SolverMode::Standard,
            mcs: McsConfig { batch_size: 10_000, target_cov: 0.05, max_samples: 1_000_000 },
            is: IsConfig { n_samples: 1000, pilot_samples: 1000 },
            sus: SusConfig { batch_per_level: 1000, p0: 0.1, max_levels: 30, proposal_width: 1.0 },
            form: FormConfig::default(),
            archive_cap: None,
        }
    }

    pub fn for_mode(mode: SolverMode) -> Self {
        match mode {
            SolverMode::Standard => Self::standard(),
            SolverMode::Desk => Self::desk(),
            SolverMode::Overkill => Self::overkill(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |s: &str| Err(Error::InvalidConfig(s.into()));
        if self.mcs.batch_size < 100 || self.is.n_samples < 100 || self.sus.batch_per_level < 100 {
            return bad("batch sizes must be at least 100");
        }
        if !(self.sus.p0 > 0.0 && self.sus.p0 < 1.0) {
            return bad("p0 must lie in (0, 1)");
        }
        if !(self.mcs.target_cov > 0.0) || self.mcs.max_samples < self.mcs.batch_size.min(100) {
            return bad("invalid Monte Carlo stopping settings");
        }
        if self.sus.max_levels == 0 || !(self.sus.proposal_width > 0.0) {
            return bad("invalid subset simulation settings");
        }
        if self.archive_cap == Some(0) {
            return bad("archive cap must be positive");
        }
        Ok(())
    }
}

/// Evaluated samples kept by a solver.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub dim: usize,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    pub g: Vec<f64>,
    /// Importance weights (1 for unweighted samples).
    pub weight: Vec<f64>,
    /// Subset level index (0 for non-subset solvers).
    pub level: Vec<u32>,
    /// Number of samples offered to the archive, kept or not.
    pub offered: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.g.len()
    }

    pub fn is_empty(&self) -> bool {
        self.g.is_empty()
    }

    pub fn x_at(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn u_at(&self, i: usize) -> &[f64] {
        &self.u[i * self.dim..(i + 1) * self.dim]
    }
}

struct Archive {
    cap: Option<usize>,
    pop: Population,
    rng: Stream,
}

impl Archive {
    fn new<R: Rng + ?Sized>(dim: usize, cap: Option<usize>, rng: &mut R) -> Self {
        // drawn unconditionally so the cap never shifts the estimator stream
        let seed = rng.random::<u64>();
        Self { cap, pop: Population { dim, ..Default::default() }, rng: Stream::seed_from_u64(seed) }
    }

    fn offer(&mut self, u: &[f64], x: &[f64], g: f64, w: f64, level: u32) {
        let d = self.pop.dim;
        let seen = self.pop.offered;
        self.pop.offered += 1;
        let slot = match self.cap {
            Some(cap) if self.pop.len() >= cap => {
                let j = self.rng.random_range(0..=seen);
                if j >= cap {
                    return;
                }
                Some(j)
            }
            _ => None,
        };
        let p = &mut self.pop;
        match slot {
            None => {
                p.u.extend_from_slice(u);
                p.x.extend_from_slice(x);
                p.g.push(g);
                p.weight.push(w);
                p.level.push(level);
            }
            Some(j) => {
                p.u[j * d..(j + 1) * d].copy_from_slice(u);
                p.x[j * d..(j + 1) * d].copy_from_slice(x);
                p.g[j] = g;
                p.weight[j] = w;
                p.level[j] = level;
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormResult {
    pub u_star: Vec<f64>,
    /// Distance to the design point, negative when the origin fails.
    pub beta: f64,
    pub iterations: usize,
    pub n_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityResult {
    pub estimator: Estimator,
    pub pf: f64,
    pub beta: f64,
    pub cov: f64,
    pub n_evals: usize,
    pub population: Population,
    /// Importance sampling only: FORM result, if it converged.
    pub form: Option<FormResult>,
    /// Importance sampling only: proposal centred by the pilot fallback.
    pub form_fallback: bool,
    /// Subset simulation only: intermediate thresholds.
    pub thresholds: Vec<f64>,
}

/// Evaluation wrapper that maps points to physical space, counts calls and
/// rejects non-finite values.
struct Evaluator<'a, L: LimitState + ?Sized> {
    g: &'a mut L,
    rv: &'a RandomVector,
    calls: usize,
    xbuf: Vec<f64>,
}

impl<'a, L: LimitState + ?Sized> Evaluator<'a, L> {
    fn new(g: &'a mut L, rv: &'a RandomVector) -> Self {
        Self { g, rv, calls: 0, xbuf: Vec::new() }
    }

    fn dim(&self) -> usize {
        self.rv.dim()
    }

    /// Evaluates the rows of `u`, leaving their physical images in `self.xbuf`.
    fn eval(&mut self, u: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim();
        let k = u.len() / d;
        self.xbuf.resize(u.len(), 0.0);
        for (ur, xr) in u.chunks(d).zip(self.xbuf.chunks_mut(d)) {
            self.rv.from_standard_normal_into(ur, xr);
        }
        self.g.eval_batch(u, &self.xbuf, d, &mut out[..k]);
        self.calls += k;
        for (i, v) in out[..k].iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteLimitState { value: *v, point: self.xbuf[i * d..(i + 1) * d].to_vec() });
            }
        }
        Ok(())
    }

    fn eval_one(&mut self, u: &[f64]) -> Result<f64> {
        let mut out = [0.0];
        self.eval(u, &mut out)?;
        Ok(out[0])
    }
}

fn normal_fill<R: Rng + ?Sized>(rng: &mut R, buf: &mut [f64]) {
    for v in buf.iter_mut() {
        *v = rng.sample(StandardNormal);
    }
}

/// Crude Monte Carlo in batches until the target coefficient of variation
/// or the sample cap is reached.
pub fn monte_carlo<L, R>(g: &mut L, rv: &RandomVector, cfg: &SolverConfig, rng: &mut R) -> Result<ReliabilityResult>
where
    L: LimitState + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let d = rv.dim();
    let mut ev = Evaluator::new(g, rv);
    let mut archive = Archive::new(d, cfg.archive_cap, rng);
    let (mut n, mut nf) = (0usize, 0usize);
    let mut u = Vec::new();
    let mut out = Vec::new();
    let (pf, cov) = loop {
        let k = cfg.mcs.batch_size.min(cfg.mcs.max_samples - n);
        u.resize(k * d, 0.0);
        out.resize(k, 0.0);
        normal_fill(rng, &mut u);
        ev.eval(&u, &mut out)?;
        for i in 0..k {
            nf += (out[i] <= 0.0) as usize;
            archive.offer(&u[i * d..(i + 1) * d], &ev.xbuf[i * d..(i + 1) * d], out[i], 1.0, 0);
        }
        n += k;
        let pf = nf as f64 / n as f64;
        let cov = if nf == 0 { f64::INFINITY } else { libm::sqrt((1.0 - pf) / (n as f64 * pf)) };
        if cov <= cfg.mcs.target_cov || n >= cfg.mcs.max_samples {
            break (pf, cov);
        }
    };
    Ok(ReliabilityResult {
        estimator: Estimator::Mcs,
        pf,
        beta: beta_from_pf(pf),
        cov,
        n_evals: ev.calls,
        population: archive.pop,
        form: None,
        form_fallback: false,
        thresholds: Vec::new(),
    })
}

fn form_inner<L: LimitState + ?Sized>(ev: &mut Evaluator<L>, cfg: &FormConfig) -> Result<FormResult> {
    let d = ev.dim();
    let start_calls = ev.calls;
    let mut u = alloc::vec![0.0; d];
    let g0 = ev.eval_one(&u)?;
    let sign = if g0 > 0.0 { 1.0 } else { -1.0 };
    let mut gu = g0;
    let mut beta_prev = 0.0;
    let mut pts = alloc::vec![0.0; 2 * d * d];
    let mut vals = alloc::vec![0.0; 2 * d];
    let mut grad = alloc::vec![0.0; d];
    for it in 1..=cfg.max_iterations {
        // central differences, one batch of 2M points
        for i in 0..d {
            let h = cfg.step * (1.0 + libm::fabs(u[i]));
            pts[2 * i * d..(2 * i + 1) * d].copy_from_slice(&u);
            pts[(2 * i + 1) * d..(2 * i + 2) * d].copy_from_slice(&u);
            pts[2 * i * d + i] += h;
            pts[(2 * i + 1) * d + i] -= h;
        }
        ev.eval(&pts, &mut vals)?;
        for i in 0..d {
            let h = cfg.step * (1.0 + libm::fabs(u[i]));
            grad[i] = (vals[2 * i] - vals[2 * i + 1]) / (2.0 * h);
        }
        let mut norm2: f64 = grad.iter().map(|v| v * v).sum();
        if !(norm2 > 0.0) {
            // symmetric kink: fall back to one-sided differences
            for i in 0..d {
                let h = cfg.step * (1.0 + libm::fabs(u[i]));
                grad[i] = (vals[2 * i] - gu) / h;
            }
            norm2 = grad.iter().map(|v| v * v).sum();
            if !(norm2 > 0.0) {
                return Err(Error::FormNotConverged(it));
            }
        }
        let gdotu: f64 = grad.iter().zip(&u).map(|(a, b)| a * b).sum();
        let factor = (gdotu - gu) / norm2;
        let mut step2 = 0.0;
        for (ui, gi) in u.iter_mut().zip(&grad) {
            let nu = factor * gi;
            step2 += (nu - *ui) * (nu - *ui);
            *ui = nu;
        }
        let beta = libm::sqrt(u.iter().map(|v| v * v).sum::<f64>());
        if !beta.is_finite() {
            return Err(Error::FormNotConverged(it));
        }
        gu = ev.eval_one(&u)?;
        if libm::fabs(beta - beta_prev) < cfg.tolerance && libm::sqrt(step2) < cfg.tolerance {
            return Ok(FormResult { u_star: u, beta: sign * beta, iterations: it, n_evals: ev.calls - start_calls });
        }
        beta_prev = beta;
    }
    Err(Error::FormNotConverged(cfg.max_iterations))
}

/// Hasofer-Lind-Rackwitz-Fiessler search for the design point, starting at
/// the origin of standard normal space.
pub fn form_hlrf<L: LimitState + ?Sized>(g: &mut L, rv: &RandomVector, cfg: &FormConfig) -> Result<FormResult> {
    let mut ev = Evaluator::new(g, rv);
    form_inner(&mut ev, cfg)
}

/// Importance sampling with a unit-covariance Gaussian proposal at the FORM
/// design point (or at the failing-sample mean of a pilot run when FORM
/// does not converge).
pub fn importance_sampling<L, R>(g: &mut L, rv: &RandomVector, cfg: &SolverConfig, rng: &mut R) -> Result<ReliabilityResult>
where
    L: LimitState + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let d = rv.dim();
    let mut ev = Evaluator::new(g, rv);
    let mut archive = Archive::new(d, cfg.archive_cap, rng);
    let form = form_inner(&mut ev, &cfg.form);
    let form_fallback = form.is_err();
    let center = match &form {
        Ok(f) => f.u_star.clone(),
        Err(Error::NonFiniteLimitState { value, point }) => {
            return Err(Error::NonFiniteLimitState { value: *value, point: point.clone() })
        }
        Err(_) => {
            let k = cfg.is.pilot_samples.max(1);
            let mut u = alloc::vec![0.0; k * d];
            let mut out = alloc::vec![0.0; k];
            normal_fill(rng, &mut u);
            ev.eval(&u, &mut out)?;
            let mut c = alloc::vec![0.0; d];
            let mut nf = 0usize;
            for i in 0..k {
                if out[i] <= 0.0 {
                    nf += 1;
                    for (cj, uj) in c.iter_mut().zip(&u[i * d..(i + 1) * d]) {
                        *cj += uj;
                    }
                }
            }
            if nf > 0 {
                c.iter_mut().for_each(|v| *v /= nf as f64);
            }
            c
        }
    };
    let n = cfg.is.n_samples;
    let mut u = alloc::vec![0.0; n * d];
    normal_fill(rng, &mut u);
    for row in u.chunks_mut(d) {
        for (v, c) in row.iter_mut().zip(&center) {
            *v += c;
        }
    }
    let mut out = alloc::vec![0.0; n];
    ev.eval(&u, &mut out)?;
    let (mut s1, mut s2) = (0.0, 0.0);
    for i in 0..n {
        let z = &u[i * d..(i + 1) * d];
        // phi(z) / phi(z - c)
        let mut e = 0.0;
        for (zj, cj) in z.iter().zip(&center) {
            e += -0.5 * zj * zj + 0.5 * (zj - cj) * (zj - cj);
        }
        let w = libm::exp(e);
        let q = if out[i] <= 0.0 { w } else { 0.0 };
        s1 += q;
        s2 += q * q;
        archive.offer(z, &ev.xbuf[i * d..(i + 1) * d], out[i], w, 0);
    }
    let nf64 = n as f64;
    let pf_raw = s1 / nf64;
    let var = ((s2 / nf64 - pf_raw * pf_raw) / (nf64 - 1.0).max(1.0)).max(0.0);
    let pf = pf_raw.min(1.0);
    let cov = if pf_raw > 0.0 { libm::sqrt(var) / pf_raw } else { f64::INFINITY };
    Ok(ReliabilityResult {
        estimator: Estimator::Is,
        pf,
        beta: beta_from_pf(pf),
        cov,
        n_evals: ev.calls,
        population: archive.pop,
        form: form.ok(),
        form_fallback,
        thresholds: Vec::new(),
    })
}

/// Chain-correlation factor of one subset level; samples are stored chain
/// by chain, `chains` chains of `len` states each.
fn chain_correlation(indicator: &[bool], chains: usize, len: usize, p: f64) -> f64 {
    let r0 = p * (1.0 - p);
    if !(r0 > 0.0) || len < 2 {
        return 0.0;
    }
    let n = (chains * len) as f64;
    let mut gamma = 0.0;
    for k in 1..len {
        let mut s = 0.0;
        for c in 0..chains {
            let ch = &indicator[c * len..(c + 1) * len];
            for l in 0..len - k {
                s += (ch[l] && ch[l + k]) as u8 as f64;
            }
        }
        let rk = s / (n - (k * chains) as f64) - p * p;
        gamma += 2.0 * (1.0 - k as f64 / len as f64) * rk / r0;
    }
    gamma.max(0.0)
}

/// Subset simulation with modified Metropolis chains in standard normal
/// space. Level sizes are `seeds * chain length` where `seeds = p0 * N`.
pub fn subset_simulation<L, R>(g: &mut L, rv: &RandomVector, cfg: &SolverConfig, rng: &mut R) -> Result<ReliabilityResult>
where
    L: LimitState + ?Sized,
    R: Rng + ?Sized,
{
    cfg.validate()?;
    let d = rv.dim();
    let p0 = cfg.sus.p0;
    let nominal = cfg.sus.batch_per_level;
    let ns = ((p0 * nominal as f64) as usize).max(1);
    let chain_len = (nominal / ns).max(2);
    let n = ns * chain_len;
    let width = cfg.sus.proposal_width;

    let mut ev = Evaluator::new(g, rv);
    let mut archive = Archive::new(d, cfg.archive_cap, rng);
    let mut u = alloc::vec![0.0; n * d];
    let mut gv = alloc::vec![0.0; n];
    normal_fill(rng, &mut u);
    ev.eval(&u, &mut gv)?;
    for i in 0..n {
        archive.offer(&u[i * d..(i + 1) * d], &ev.xbuf[i * d..(i + 1) * d], gv[i], 1.0, 0);
    }

    let mut thresholds: Vec<f64> = Vec::new();
    let mut log_pf_factor = 0.0;
    let mut cov2 = 0.0;
    let mut level = 0usize;
    let mut order: Vec<usize> = (0..n).collect();
    let mut cand = alloc::vec![0.0; ns * d];
    let mut cand_g = alloc::vec![0.0; ns];
    let mut changed = alloc::vec![false; ns];
    let (pf, cov) = loop {
        order.sort_by(|&a, &b| gv[a].total_cmp(&gv[b]).then(a.cmp(&b)));
        let t = 0.5 * (gv[order[ns - 1]] + gv[order[ns]]);
        let chained = level > 0;
        if t <= 0.0 || level + 1 >= cfg.sus.max_levels {
            let nf = gv.iter().filter(|v| **v <= 0.0).count();
            let p = nf as f64 / n as f64;
            if nf == 0 {
                break (0.0, f64::INFINITY);
            }
            let ind: Vec<bool> = gv.iter().map(|v| *v <= 0.0).collect();
            let gamma = if chained { chain_correlation(&ind, ns, chain_len, p) } else { 0.0 };
            cov2 += (1.0 - p) / (p * n as f64) * (1.0 + gamma);
            break (libm::exp(log_pf_factor) * p, libm::sqrt(cov2));
        }
        if let Some(&prev) = thresholds.last() {
            if t >= prev {
                return Err(Error::DegenerateLevels { previous: prev, next: t });
            }
        }
        let p = ns as f64 / n as f64;
        let ind: Vec<bool> = gv.iter().map(|v| *v <= t).collect();
        let gamma = if chained { chain_correlation(&ind, ns, chain_len, p) } else { 0.0 };
        cov2 += (1.0 - p) / (p * n as f64) * (1.0 + gamma);
        log_pf_factor += libm::log(p);
        thresholds.push(t);
        level += 1;

        // seeds, laid out chain by chain
        let mut nu = alloc::vec![0.0; n * d];
        let mut ng = alloc::vec![0.0; n];
        for (c, &s) in order[..ns].iter().enumerate() {
            nu[c * chain_len * d..(c * chain_len + 1) * d].copy_from_slice(&u[s * d..(s + 1) * d]);
            ng[c * chain_len] = gv[s];
        }
        for l in 1..chain_len {
            for c in 0..ns {
                let prev = (c * chain_len + l - 1) * d;
                changed[c] = false;
                for j in 0..d {
                    let cur = nu[prev + j];
                    let xi = cur + width * (2.0 * rng.random::<f64>() - 1.0);
                    let ratio = libm::exp(-0.5 * (xi * xi - cur * cur));
                    let accept = rng.random::<f64>() < ratio;
                    cand[c * d + j] = if accept { xi } else { cur };
                    changed[c] |= accept;
                }
            }
            // evaluate only moved candidates, in one batch
            let moved: Vec<usize> = (0..ns).filter(|&c| changed[c]).collect();
            let mut mu = Vec::with_capacity(moved.len() * d);
            for &c in &moved {
                mu.extend_from_slice(&cand[c * d..(c + 1) * d]);
            }
            if !moved.is_empty() {
                ev.eval(&mu, &mut cand_g[..moved.len()])?;
            }
            let mut accepted = alloc::vec![None; ns];
            for (k, &c) in moved.iter().enumerate() {
                if cand_g[k] <= t {
                    accepted[c] = Some(cand_g[k]);
                }
            }
            for c in 0..ns {
                let prev = c * chain_len + l - 1;
                let cur = c * chain_len + l;
                match accepted[c] {
                    Some(gc) => {
                        nu[cur * d..(cur + 1) * d].copy_from_slice(&cand[c * d..(c + 1) * d]);
                        ng[cur] = gc;
                    }
                    None => {
                        nu.copy_within(prev * d..(prev + 1) * d, cur * d);
                        ng[cur] = ng[prev];
                    }
                }
            }
        }
        u = nu;
        gv = ng;
        let mut x = alloc::vec![0.0; d];
        for i in 0..n {
            rv.from_standard_normal_into(&u[i * d..(i + 1) * d], &mut x);
            archive.offer(&u[i * d..(i + 1) * d], &x, gv[i], 1.0, level as u32);
        }
    };
    Ok(ReliabilityResult {
        estimator: Estimator::Sus,
        pf,
        beta: beta_from_pf(pf),
        cov,
        n_evals: ev.calls,
        population: archive.pop,
        form: None,
        form_fallback: false,
        thresholds,
    })
}

/// Runs the chosen estimator.
pub fn estimate<L, R>(estimator: Estimator, g: &mut L, rv: &RandomVector, cfg: &SolverConfig, rng: &mut R) -> Result<ReliabilityResult>
where
    L: LimitState + ?Sized,
    R: Rng + ?Sized,
{
    match estimator {
        Estimator::Mcs => monte_carlo(g, rv, cfg, rng),
        Estimator::Is => importance_sampling(g, rv, cfg, rng),
        Estimator::Sus => subset_simulation(g, rv, cfg, rng),
    }
}
