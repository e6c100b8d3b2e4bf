//! Sparse polynomial chaos expansions in standard normal space.
//!
//! The candidate basis is a hyperbolic (q-norm) truncation with bounded
//! interaction order; coefficients are selected along a least-angle
//! regression path where every active set is refitted by ordinary least
//! squares, and the path step with the smallest corrected leave-one-out
//! error wins. The total degree is adapted upward until the error stops
//! improving.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::design::ExperimentalDesign;
use crate::error::{Error, Result};
use crate::input::RandomVector;
use crate::linalg::{cholesky_solve, dot, least_squares, solve_lower};

/// Degrees of a multivariate polynomial, one per input dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(dim: usize) -> Self {
        Self(alloc::vec![0; dim])
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn interaction_order(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    pub fn q_norm(&self, q: f64) -> f64 {
        let s: f64 = self.0.iter().filter(|&&a| a > 0).map(|&a| libm::pow(a as f64, q)).sum();
        libm::pow(s, 1.0 / q)
    }
}

/// Truncation and selection settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PceConfig {
    pub max_degree: u32,
    pub q_norm: f64,
    pub max_interaction: usize,
    /// Number of consecutive non-improving degrees before the degree
    /// adaptation stops.
    pub early_stop: usize,
    pub basis_cap: usize,
}

impl Default for PceConfig {
    fn default() -> Self {
        Self { max_degree: 20, q_norm: 0.75, max_interaction: 2, early_stop: 2, basis_cap: 100_000 }
    }
}

/// All multi-indices with q-norm at most `p` and at most `r` non-zero
/// entries, ordered by total degree and then in decreasing lexicographic
/// order, e.g. `(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)`.
pub fn hyperbolic_basis(dim: usize, p: u32, q: f64, r: usize, cap: usize) -> Result<Vec<MultiIndex>> {
    if dim == 0 || !(q > 0.0 && q <= 1.0) || r == 0 {
        return Err(Error::InvalidConfig(alloc::format!(
            "hyperbolic truncation needs dim >= 1, 0 < q <= 1, r >= 1 (got {dim}, {q}, {r})"
        )));
    }
    let mut out = Vec::new();
    let mut current = alloc::vec![0u32; dim];
    // q-norm >= 1-norm for q <= 1, so the total-degree simplex is a superset.
    let limit = p as f64 + 1e-10;
    fn rec(
        k: usize,
        remaining: u32,
        nonzero: usize,
        qsum: f64,
        st: (&mut Vec<u32>, &mut Vec<MultiIndex>, f64, f64, usize, usize),
    ) -> Result<()> {
        let (current, out, q, limit, r, cap) = st;
        if k == current.len() {
            out.push(MultiIndex(current.clone()));
            if out.len() > cap {
                return Err(Error::BasisTooLarge { size: out.len(), cap });
            }
            return Ok(());
        }
        rec(k + 1, remaining, nonzero, qsum, (&mut *current, &mut *out, q, limit, r, cap))?;
        if nonzero < r {
            for a in 1..=remaining {
                let s = qsum + libm::pow(a as f64, q);
                if libm::pow(s, 1.0 / q) > limit {
                    break;
                }
                current[k] = a;
                rec(k + 1, remaining - a, nonzero + 1, s, (&mut *current, &mut *out, q, limit, r, cap))?;
            }
            current[k] = 0;
        }
        Ok(())
    }
    rec(0, p, 0, 0.0, (&mut current, &mut out, q, limit, r, cap))?;
    out.sort_by(|a, b| a.total_degree().cmp(&b.total_degree()).then_with(|| b.0.cmp(&a.0)));
    Ok(out)
}

/// Orthonormal probabilists' Hermite polynomials `He_k(u) / sqrt(k!)` for
/// `k = 0..=p`, written into `out`.
pub fn hermite_normalized(u: f64, p: usize, out: &mut [f64]) {
    out[0] = 1.0;
    if p == 0 {
        return;
    }
    out[1] = u;
    // psi_{k+1} = (u psi_k - sqrt(k) psi_{k-1}) / sqrt(k+1)
    for k in 1..p {
        out[k + 1] = (u * out[k] - libm::sqrt(k as f64) * out[k - 1]) / libm::sqrt((k + 1) as f64);
    }
}

/// Basis stored as sparse `(dimension, degree)` factors for fast evaluation.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SparseBasis {
    dim: usize,
    max_degree: usize,
    terms: Vec<Vec<(usize, usize)>>,
}

impl SparseBasis {
    pub(crate) fn new(basis: &[MultiIndex]) -> Self {
        let dim = basis.first().map_or(0, |a| a.0.len());
        let max_degree = basis.iter().flat_map(|a| a.0.iter()).copied().max().unwrap_or(0) as usize;
        let terms = basis
            .iter()
            .map(|a| a.0.iter().enumerate().filter(|(_, &d)| d > 0).map(|(i, &d)| (i, d as usize)).collect())
            .collect();
        Self { dim, max_degree, terms }
    }

    pub(crate) fn len(&self) -> usize {
        self.terms.len()
    }

    /// Evaluates every basis term at `u`; `table` is scratch of size
    /// `dim * (max_degree + 1)`.
    pub(crate) fn eval_into(&self, u: &[f64], table: &mut Vec<f64>, out: &mut [f64]) {
        let w = self.max_degree + 1;
        table.resize(self.dim * w, 0.0);
        for (i, &ui) in u.iter().enumerate().take(self.dim) {
            hermite_normalized(ui, self.max_degree, &mut table[i * w..(i + 1) * w]);
        }
        for (o, term) in out.iter_mut().zip(&self.terms) {
            *o = term.iter().fold(1.0, |acc, &(i, d)| acc * table[i * w + d]);
        }
    }

    /// Row-major `n x P` design matrix.
    pub(crate) fn matrix(&self, points: &[Vec<f64>]) -> Vec<f64> {
        let p = self.len();
        let mut m = alloc::vec![0.0; points.len() * p];
        let mut table = Vec::new();
        for (row, u) in m.chunks_mut(p).zip(points) {
            self.eval_into(u, &mut table, row);
        }
        m
    }
}

/// Values of all basis polynomials at a standard normal point.
pub fn evaluate_basis(basis: &[MultiIndex], u: &[f64]) -> Vec<f64> {
    let sb = SparseBasis::new(basis);
    let mut out = alloc::vec![0.0; basis.len()];
    let mut table = Vec::new();
    sb.eval_into(u, &mut table, &mut out);
    out
}

/// A fitted sparse expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PceModel {
    pub basis: Vec<MultiIndex>,
    pub coefficients: Vec<f64>,
    /// Corrected leave-one-out error, relative to the output variance.
    pub loo_error: f64,
    pub degree: u32,
    pub input: RandomVector,
    #[serde(skip)]
    sparse: Option<SparseBasis>,
}

impl PceModel {
    fn build(basis: Vec<MultiIndex>, coefficients: Vec<f64>, loo_error: f64, degree: u32, input: RandomVector) -> Self {
        let sparse = Some(SparseBasis::new(&basis));
        Self { basis, coefficients, loo_error, degree, input, sparse }
    }

    fn sparse(&self) -> SparseBasis {
        self.sparse.clone().unwrap_or_else(|| SparseBasis::new(&self.basis))
    }

    /// Prediction at a standard normal point.
    pub fn predict_u(&self, u: &[f64]) -> f64 {
        let mut vals = alloc::vec![0.0; self.basis.len()];
        let mut table = Vec::new();
        match &self.sparse {
            Some(sb) => sb.eval_into(u, &mut table, &mut vals),
            None => self.sparse().eval_into(u, &mut table, &mut vals),
        }
        dot(&vals, &self.coefficients)
    }

    /// Prediction at a physical-space point.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let (u, _) = self.input.to_standard_normal(x)?;
        Ok(self.predict_u(&u))
    }

    /// Batch prediction over row-major standard normal points.
    pub fn predict_u_batch(&self, points: &[f64], out: &mut [f64]) {
        let m = self.input.dim();
        let sb = self.sparse();
        let mut vals = alloc::vec![0.0; self.basis.len()];
        let mut table = Vec::new();
        for (u, o) in points.chunks(m).zip(out.iter_mut()) {
            sb.eval_into(u, &mut table, &mut vals);
            *o = dot(&vals, &self.coefficients);
        }
    }
}

/// Outcome of one least-angle regression path.
struct PathSelection {
    /// Columns of the candidate basis (always containing 0, the constant).
    columns: Vec<usize>,
    coefficients: Vec<f64>,
    loo: f64,
}

/// OLS refit on a column subset with corrected leave-one-out error.
fn ols_loo(psi: &[f64], n: usize, p: usize, cols: &[usize], y: &[f64], var_y: f64) -> Option<(Vec<f64>, f64)> {
    let k = cols.len();
    if k >= n {
        return None;
    }
    let sub: Vec<f64> = (0..n).flat_map(|r| cols.iter().map(move |&c| psi[r * p + c])).collect();
    let (coef, l, regularized) = least_squares(&sub, n, k, y, 1e-10)?;
    if regularized {
        return None;
    }
    let mut loo = 0.0;
    let mut v = alloc::vec![0.0; k];
    for r in 0..n {
        let row = &sub[r * k..(r + 1) * k];
        v.copy_from_slice(row);
        solve_lower(&l, k, &mut v);
        let h = dot(&v, &v);
        if h >= 1.0 - 1e-10 {
            return Some((coef, f64::INFINITY));
        }
        let e = (y[r] - dot(row, &coef)) / (1.0 - h);
        loo += e * e;
    }
    loo /= n as f64;
    // tr((Psi^T Psi)^{-1}) from the inverse of the Cholesky factor
    let mut trace = 0.0;
    let mut col = alloc::vec![0.0; k];
    for j in 0..k {
        col.iter_mut().for_each(|c| *c = 0.0);
        col[j] = 1.0;
        solve_lower(&l, k, &mut col);
        trace += dot(&col, &col);
    }
    let correction = (n as f64 / (n - k) as f64) * (1.0 + trace);
    let rel = if var_y > 0.0 { loo / var_y } else { loo };
    Some((coef, rel * correction))
}

/// Hybrid LARS on a row-major `n x p` basis matrix whose column 0 is the
/// constant term.
fn hybrid_lars(psi: &[f64], n: usize, p: usize, y: &[f64]) -> PathSelection {
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let var_y = y.iter().map(|v| (v - mean_y) * (v - mean_y)).sum::<f64>() / n as f64;
    let constant_only = |loo: f64| PathSelection { columns: alloc::vec![0], coefficients: alloc::vec![mean_y], loo };
    let const_loo = ols_loo(psi, n, p, &[0], y, var_y).map_or(f64::INFINITY, |(_, l)| l);
    if var_y <= 1e-28 * (1.0 + mean_y * mean_y) || n < 3 || p < 2 {
        return constant_only(if var_y > 0.0 { const_loo } else { 0.0 });
    }

    // centered, unit-norm predictors (column-major for cache-friendly dots)
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut usable = alloc::vec![false; p];
    for j in 0..p {
        let col: Vec<f64> = (0..n).map(|r| psi[r * p + j]).collect();
        let mu = col.iter().sum::<f64>() / n as f64;
        let centered: Vec<f64> = col.iter().map(|v| v - mu).collect();
        let norm = libm::sqrt(dot(&centered, &centered));
        if j > 0 && norm > 1e-10 {
            usable[j] = true;
            xs.push(centered.into_iter().map(|v| v / norm).collect());
        } else {
            xs.push(alloc::vec![0.0; n]);
        }
    }
    let yc: Vec<f64> = y.iter().map(|v| v - mean_y).collect();
    let max_active = (p - 1).min(n - 2);

    let mut best = constant_only(const_loo);
    let mut active: Vec<usize> = Vec::new();
    // Cholesky factor of X_A^T X_A, grown one row at a time (row-major, k x k packed into cap x cap)
    let cap = max_active;
    let mut chol = alloc::vec![0.0; cap * cap];
    let mut mu = alloc::vec![0.0; n];
    let mut corr: Vec<f64> = (0..p).map(|j| if usable[j] { dot(&xs[j], &yc) } else { 0.0 }).collect();
    let c0 = corr.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if c0 <= 1e-14 * libm::sqrt(dot(&yc, &yc)) {
        return best;
    }
    let mut next = (0..p).filter(|&j| usable[j]).max_by(|&a, &b| corr[a].abs().total_cmp(&corr[b].abs()));

    while let Some(j) = next {
        if active.len() >= max_active {
            break;
        }
        // append column j to the Cholesky factor
        let k = active.len();
        let mut row: Vec<f64> = active.iter().map(|&a| dot(&xs[a], &xs[j])).collect();
        for i in 0..k {
            let s = row[i] - (0..i).map(|t| chol[i * cap + t] * row[t]).sum::<f64>();
            row[i] = s / chol[i * cap + i];
        }
        let d2 = 1.0 - dot(&row, &row);
        usable[j] = false;
        if d2 <= 1e-10 {
            // collinear with the active set
            next = (0..p).filter(|&t| usable[t]).max_by(|&a, &b| corr[a].abs().total_cmp(&corr[b].abs()));
            continue;
        }
        for (i, v) in row.iter().enumerate() {
            chol[k * cap + i] = *v;
        }
        chol[k * cap + k] = libm::sqrt(d2);
        active.push(j);
        let k = active.len();

        // hybrid step: OLS on {constant} + active
        let mut cols = alloc::vec![0usize];
        cols.extend_from_slice(&active);
        if let Some((coef, loo)) = ols_loo(psi, n, p, &cols, y, var_y) {
            if loo < best.loo {
                best = PathSelection { columns: cols, coefficients: coef, loo };
            }
        }
        if k >= max_active {
            break;
        }

        // equiangular direction: b = G^{-1} s
        let signs: Vec<f64> = active.iter().map(|&a| if corr[a] >= 0.0 { 1.0 } else { -1.0 }).collect();
        let mut b = signs.clone();
        let mut lk = alloc::vec![0.0; k * k];
        for i in 0..k {
            lk[i * k..i * k + i + 1].copy_from_slice(&chol[i * cap..i * cap + i + 1]);
        }
        cholesky_solve(&lk, k, &mut b);
        let norm_sq: f64 = dot(&signs, &b);
        if !(norm_sq > 0.0) {
            break;
        }
        let aa = 1.0 / libm::sqrt(norm_sq);
        let mut u = alloc::vec![0.0; n];
        for (&a, &bj) in active.iter().zip(&b) {
            for (ui, xv) in u.iter_mut().zip(&xs[a]) {
                *ui += aa * bj * xv;
            }
        }
        let c_max = active.iter().fold(0.0f64, |m, &a| m.max(corr[a].abs()));
        let mut gamma = c_max / aa;
        let mut entering = None;
        for t in 0..p {
            if !usable[t] {
                continue;
            }
            let at = dot(&xs[t], &u);
            for g in [(c_max - corr[t]) / (aa - at), (c_max + corr[t]) / (aa + at)] {
                if g > 1e-12 && g < gamma {
                    gamma = g;
                    entering = Some(t);
                }
            }
        }
        for (m, ui) in mu.iter_mut().zip(&u) {
            *m += gamma * ui;
        }
        let resid: Vec<f64> = yc.iter().zip(&mu).map(|(a, b)| a - b).collect();
        for t in 0..p {
            if usable[t] || active.contains(&t) {
                corr[t] = dot(&xs[t], &resid);
            }
        }
        if dot(&resid, &resid) <= 1e-28 * dot(&yc, &yc) {
            break;
        }
        next = entering;
    }
    best
}

/// Fits a sparse PCE with degree adaptivity.
pub fn fit_pce_lars(ed: &ExperimentalDesign, rv: &RandomVector, cfg: &PceConfig) -> Result<PceModel> {
    let n = ed.len();
    if n < 3 {
        return Err(Error::Design("PCE needs at least 3 points".into()));
    }
    if ed.dim() != rv.dim() {
        return Err(Error::Design("design and input model dimensions differ".into()));
    }
    let us: Vec<Vec<f64>> = ed.inputs().iter().map(|x| rv.to_standard_normal(x).map(|(u, _)| u)).collect::<Result<_>>()?;
    fit_pce_lars_u(&us, ed.outputs(), rv, cfg)
}

/// Same as [`fit_pce_lars`] with inputs already in standard normal space.
pub fn fit_pce_lars_u(us: &[Vec<f64>], y: &[f64], rv: &RandomVector, cfg: &PceConfig) -> Result<PceModel> {
    let n = us.len();
    let m = rv.dim();
    let mut best: Option<PceModel> = None;
    let mut stale = 0usize;
    for degree in 1..=cfg.max_degree.max(1) {
        let basis = hyperbolic_basis(m, degree, cfg.q_norm, cfg.max_interaction, cfg.basis_cap)?;
        let sb = SparseBasis::new(&basis);
        let psi = sb.matrix(us);
        let sel = hybrid_lars(&psi, n, basis.len(), y);
        let chosen: Vec<MultiIndex> = sel.columns.iter().map(|&c| basis[c].clone()).collect();
        let model = PceModel::build(chosen, sel.coefficients, sel.loo, degree, rv.clone());
        let improved = best.as_ref().map_or(true, |b| model.loo_error < b.loo_error);
        if improved {
            best = Some(model);
            stale = 0;
        } else {
            stale += 1;
        }
        let done = best.as_ref().is_some_and(|b| b.loo_error <= 1e-26);
        if stale >= cfg.early_stop || done {
            break;
        }
    }
    Ok(best.expect("at least one degree is tried"))
}

/// Bootstrap replicates of a PCE: basis frozen, coefficients refitted on
/// with-replacement resamples of the design.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapEnsemble {
    pub base: PceModel,
    /// `B` coefficient vectors aligned with `base.basis`.
    pub replicates: Vec<Vec<f64>>,
    /// Number of replicates that needed the ridge fallback.
    pub ridge_fallbacks: usize,
}

impl BootstrapEnsemble {
    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    /// Replicate predictions at a standard normal point.
    pub fn predict_u(&self, u: &[f64]) -> Vec<f64> {
        let vals = evaluate_basis(&self.base.basis, u);
        self.replicates.iter().map(|c| dot(&vals, c)).collect()
    }
}

/// Ridge penalty used when a resample is rank deficient.
pub const BOOTSTRAP_RIDGE: f64 = 1e-8;

pub fn bootstrap_replicates<R: Rng + ?Sized>(
    ed: &ExperimentalDesign,
    rv: &RandomVector,
    base: &PceModel,
    count: usize,
    rng: &mut R,
) -> Result<BootstrapEnsemble> {
    let us: Vec<Vec<f64>> = ed.inputs().iter().map(|x| rv.to_standard_normal(x).map(|(u, _)| u)).collect::<Result<_>>()?;
    bootstrap_replicates_u(&us, ed.outputs(), base, count, rng)
}

pub fn bootstrap_replicates_u<R: Rng + ?Sized>(
    us: &[Vec<f64>],
    y: &[f64],
    base: &PceModel,
    count: usize,
    rng: &mut R,
) -> Result<BootstrapEnsemble> {
    if count < 2 {
        return Err(Error::InvalidConfig("bootstrap needs at least 2 replicates".into()));
    }
    let n = us.len();
    let sb = SparseBasis::new(&base.basis);
    let p = sb.len();
    let psi = sb.matrix(us);
    let mut replicates = Vec::with_capacity(count);
    let mut ridge_fallbacks = 0;
    let mut rows = alloc::vec![0.0; n * p];
    let mut yb = alloc::vec![0.0; n];
    for _ in 0..count {
        for r in 0..n {
            let pick = rng.random_range(0..n);
            rows[r * p..(r + 1) * p].copy_from_slice(&psi[pick * p..(pick + 1) * p]);
            yb[r] = y[pick];
        }
        let (coef, _, regularized) = least_squares(&rows, n, p, &yb, BOOTSTRAP_RIDGE)
            .ok_or_else(|| Error::Design("bootstrap resample not solvable even with ridge".into()))?;
        ridge_fallbacks += regularized as usize;
        replicates.push(coef);
    }
    Ok(BootstrapEnsemble { base: base.clone(), replicates, ridge_fallbacks })
}
