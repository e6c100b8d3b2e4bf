use std::cell::Cell;

use alr_core::input::{MarginalDistribution as D, RandomVector};
use alr_core::problems::four_branch;
use alr_core::reliability::{estimate, form_hlrf, importance_sampling, subset_simulation, Estimator, FormConfig, PhysicalFn, SolverConfig, StandardFn};
use alr_core::rng::stream;
use alr_core::special::norm_cdf;

fn rv(m: usize) -> RandomVector {
    RandomVector::standard_normal(m).unwrap()
}

fn plane(beta: f64) -> impl FnMut(&[f64]) -> f64 {
    move |u: &[f64]| beta - (u[0] + u[1]) / std::f64::consts::SQRT_2
}

#[test]
fn estimators_agree_on_hyperplanes() {
    let cfg = SolverConfig::standard();
    for beta in [1.0, 2.0, 3.0] {
        let exact = norm_cdf(-beta);
        for est in Estimator::ALL {
            let r = estimate(est, &mut StandardFn(plane(beta)), &rv(2), &cfg, &mut stream(beta as u64, &[])).unwrap();
            let tol = 3.0 * r.cov.max(0.02) * exact;
            assert!((r.pf - exact).abs() <= tol, "{} beta={beta}: {} vs {exact}", est.code(), r.pf);
        }
    }
}

#[test]
fn reported_evaluations_match_calls() {
    let calls = Cell::new(0usize);
    let x = RandomVector::new(vec![D::lognormal(2.0, 0.3).unwrap(), D::gumbel(1.0, 0.2).unwrap()]).unwrap();
    let g = |p: &[f64]| {
        calls.set(calls.get() + 1);
        4.0 - p[0] - p[1]
    };
    for est in Estimator::ALL {
        calls.set(0);
        let r = estimate(est, &mut PhysicalFn(g), &x, &SolverConfig::standard(), &mut stream(5, &[])).unwrap();
        assert_eq!(r.n_evals, calls.get(), "{}", est.code());
        if est != Estimator::Sus {
            assert!(r.population.len() <= r.n_evals);
        }
    }
}

#[test]
fn uncapped_archive_holds_every_sample() {
    let cfg = SolverConfig::standard();
    let r = estimate(Estimator::Mcs, &mut StandardFn(plane(2.0)), &rv(2), &cfg, &mut stream(8, &[])).unwrap();
    assert_eq!(r.population.len(), r.n_evals);
    let r = estimate(Estimator::Is, &mut StandardFn(plane(2.0)), &rv(2), &cfg, &mut stream(8, &[])).unwrap();
    assert_eq!(r.population.len() + r.form.as_ref().unwrap().n_evals, r.n_evals);
    let r = estimate(Estimator::Sus, &mut StandardFn(plane(2.0)), &rv(2), &cfg, &mut stream(8, &[])).unwrap();
    let per_level = 1000;
    assert_eq!(r.population.len(), per_level * (r.thresholds.len() + 1));
}

#[test]
fn subset_simulation_is_nearly_unbiased() {
    let exact = norm_cdf(-2.0);
    let cfg = SolverConfig::standard();
    let pfs: Vec<f64> = (0..50)
        .map(|s| subset_simulation(&mut StandardFn(plane(2.0)), &rv(2), &cfg, &mut stream(100 + s, &[])).unwrap().pf)
        .collect();
    let n = pfs.len() as f64;
    let mean = pfs.iter().sum::<f64>() / n;
    let sd = (pfs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!((mean - exact).abs() <= 2.0 * sd / n.sqrt(), "mean {mean} vs {exact}, sd {sd}");
}

#[test]
fn importance_sampling_deep_tail() {
    let mut g = StandardFn(|u: &[f64]| 4.5 - u[1]);
    let mut cfg = SolverConfig::standard();
    cfg.is.n_samples = 10_000;
    let r = importance_sampling(&mut g, &rv(3), &cfg, &mut stream(4, &[])).unwrap();
    let exact = 3.3976731247300535e-6;
    assert!((norm_cdf(-4.5) - exact).abs() < 1e-18);
    assert!((r.pf - exact).abs() <= 3.0 * r.cov * r.pf, "{} vs {exact}", r.pf);
    assert!(!r.form_fallback);
}

#[test]
fn subset_simulation_deep_tail() {
    let exact = 2.866515718791939e-7;
    assert!((norm_cdf(-5.0) - exact).abs() < 1e-18);
    let cfg = SolverConfig::standard();
    let inside = (0..10)
        .filter(|&s| {
            let r = subset_simulation(&mut StandardFn(plane(5.0)), &rv(2), &cfg, &mut stream(300 + s, &[])).unwrap();
            (r.pf - exact).abs() <= 2.0 * r.cov * exact
        })
        .count();
    assert!(inside >= 8, "{inside} of 10");
}

#[test]
fn subset_simulation_with_quarter_levels() {
    let mut cfg = SolverConfig::standard();
    cfg.sus.p0 = 0.25;
    let r = subset_simulation(&mut StandardFn(|u: &[f64]| 1.0 - u[0]), &rv(2), &cfg, &mut stream(6, &[])).unwrap();
    let exact = norm_cdf(-1.0);
    assert!((r.pf - exact).abs() <= 3.0 * r.cov * exact, "{}", r.pf);
    for w in r.thresholds.windows(2) {
        assert!(w[1] < w[0]);
    }
}

// Smallest root radius over a fine angular grid, by bisection along rays.
fn min_radius(g: impl Fn(&[f64]) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for k in 0..20_000 {
        let a = k as f64 * std::f64::consts::TAU / 20_000.0;
        let dir = [a.cos(), a.sin()];
        let at = |r: f64| g(&[r * dir[0], r * dir[1]]);
        if at(10.0) > 0.0 {
            continue;
        }
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        best = best.min(hi);
    }
    best
}

#[test]
fn form_on_piecewise_surface() {
    let oracle = min_radius(four_branch);
    assert!((oracle - 3.0).abs() < 1e-6);
    let f = form_hlrf(&mut PhysicalFn(four_branch), &rv(2), &FormConfig::default()).unwrap();
    assert!((f.beta - oracle).abs() < 1e-4, "{}", f.beta);
    assert!(four_branch(&f.u_star).abs() < 1e-6);
}

#[test]
fn form_handles_non_gaussian_inputs() {
    // g = R - S with lognormal R, gaussian S; exact design point via the oracle
    let x = RandomVector::new(vec![D::lognormal(10.0, 0.1).unwrap(), D::gaussian(5.0, 1.0).unwrap()]).unwrap();
    let g = |p: &[f64]| p[0] - p[1];
    let f = form_hlrf(&mut PhysicalFn(g), &x, &FormConfig::default()).unwrap();
    let oracle = min_radius(|u: &[f64]| g(&x.from_standard_normal(u)));
    assert!((f.beta - oracle).abs() < 1e-4, "{} vs {oracle}", f.beta);
}
