//! Box-constrained derivative-free minimizers used for hyperparameter
//! estimation: a differential-evolution population search and a
//! Nelder-Mead polish.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeConfig {
    pub population: usize,
    pub generations: usize,
    /// Differential weight.
    pub weight: f64,
    pub crossover: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self { population: 30, generations: 50, weight: 0.8, crossover: 0.9 }
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

/// DE/rand/1/bin. `seed_points` are placed in the initial population ahead
/// of the uniform draws. Returns the best point and its objective.
pub fn differential_evolution<F, R>(
    mut objective: F,
    lower: &[f64],
    upper: &[f64],
    cfg: &DeConfig,
    seed_points: &[Vec<f64>],
    rng: &mut R,
) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let dim = lower.len();
    let np = cfg.population.max(4);
    let mut pop: Vec<Vec<f64>> = Vec::with_capacity(np);
    for s in seed_points.iter().take(np) {
        let mut p = s.clone();
        clamp_into(&mut p, lower, upper);
        pop.push(p);
    }
    while pop.len() < np {
        pop.push((0..dim).map(|k| lower[k] + rng.random::<f64>() * (upper[k] - lower[k])).collect());
    }
    let mut fit: Vec<f64> = pop.iter().map(|p| sanitize(objective(p))).collect();
    let mut trial = alloc::vec![0.0; dim];
    for _ in 0..cfg.generations {
        for i in 0..np {
            let (a, b, c) = loop {
                let a = rng.random_range(0..np);
                let b = rng.random_range(0..np);
                let c = rng.random_range(0..np);
                if a != i && b != i && c != i && a != b && b != c && a != c {
                    break (a, b, c);
                }
            };
            let forced = rng.random_range(0..dim);
            for k in 0..dim {
                trial[k] = if k == forced || rng.random::<f64>() < cfg.crossover {
                    pop[a][k] + cfg.weight * (pop[b][k] - pop[c][k])
                } else {
                    pop[i][k]
                };
            }
            clamp_into(&mut trial, lower, upper);
            let f = sanitize(objective(&trial));
            if f <= fit[i] {
                pop[i].copy_from_slice(&trial);
                fit[i] = f;
            }
        }
    }
    let best = (0..np).min_by(|&a, &b| fit[a].total_cmp(&fit[b])).unwrap_or(0);
    (pop.swap_remove(best), fit[best])
}

/// Nelder-Mead with projection onto the box. Stops after `max_evals`
/// objective calls or when the simplex spread falls under `tol`.
pub fn nelder_mead<F>(
    mut objective: F,
    start: &[f64],
    lower: &[f64],
    upper: &[f64],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let n = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitize(objective(x))
    };
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut x0 = start.to_vec();
    clamp_into(&mut x0, lower, upper);
    simplex.push(x0.clone());
    for k in 0..n {
        let mut p = x0.clone();
        let width = upper[k] - lower[k];
        let s = step * width;
        p[k] = if p[k] + s <= upper[k] { p[k] + s } else { p[k] - s };
        simplex.push(p);
    }
    let mut f: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();
    let mut centroid = alloc::vec![0.0; n];
    let mut cand = alloc::vec![0.0; n];
    let mut cand2 = alloc::vec![0.0; n];
    while evals < max_evals {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| f[a].total_cmp(&f[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        f = order.iter().map(|&i| f[i]).collect();
        let spread = f[n] - f[0];
        if spread.is_finite() && spread.abs() <= tol * (1.0 + f[0].abs()) {
            break;
        }
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for p in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let point = |coef: f64, out: &mut [f64], worst: &[f64]| {
            for k in 0..n {
                out[k] = centroid[k] + coef * (worst[k] - centroid[k]);
            }
            clamp_into(out, lower, upper);
        };
        let worst = simplex[n].clone();
        point(-1.0, &mut cand, &worst);
        let fr = eval(&cand, &mut evals);
        if fr < f[0] {
            point(-2.0, &mut cand2, &worst);
            let fe = eval(&cand2, &mut evals);
            if fe < fr {
                simplex[n].copy_from_slice(&cand2);
                f[n] = fe;
            } else {
                simplex[n].copy_from_slice(&cand);
                f[n] = fr;
            }
        } else if fr < f[n - 1] {
            simplex[n].copy_from_slice(&cand);
            f[n] = fr;
        } else {
            let outside = fr < f[n];
            point(if outside { -0.5 } else { 0.5 }, &mut cand2, &worst);
            let fc = eval(&cand2, &mut evals);
            if fc < f[n].min(fr) {
                simplex[n].copy_from_slice(&cand2);
                f[n] = fc;
            } else {
                // shrink toward the best vertex
                let best = simplex[0].clone();
                for i in 1..=n {
                    for k in 0..n {
                        simplex[i][k] = best[k] + 0.5 * (simplex[i][k] - best[k]);
                    }
                    f[i] = eval(&simplex[i], &mut evals);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| f[a].total_cmp(&f[b])).unwrap_or(0);
    (simplex.swap_remove(best), f[best])
}
