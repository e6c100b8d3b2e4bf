use alr_core::input::{lhs_sample, MarginalDistribution as D, RandomVector};
use alr_core::rng::stream;
use alr_core::special::{beta_from_pf, norm_cdf, norm_inv_cdf, pf_from_beta};
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn families() -> Vec<D> {
    vec![
        D::gaussian(2.0, 0.5).unwrap(),
        D::lognormal(355e6, 0.2).unwrap(),
        D::lognormal(0.05, 0.4).unwrap(),
        D::gumbel(3.5e4, 0.3).unwrap(),
        D::uniform(-30.0, 30.0).unwrap(),
    ]
}

// Adaptive Simpson, test-only.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    rec(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, 50)
}

#[test]
fn pdf_integrates_to_one() {
    for d in families() {
        let lo = d.inv_cdf(1e-13).unwrap();
        let hi = d.inv_cdf(1.0 - 1e-13).unwrap();
        let mass = simpson(&|x| d.pdf(x), lo, hi, 1e-10);
        assert!((mass - 1.0).abs() < 1e-6, "{}: {mass}", d.family());
    }
}

#[test]
fn cdf_inverts_quantile() {
    for d in families() {
        for p in [1e-7, 1e-3, 0.5, 1.0 - 1e-3] {
            let x = d.inv_cdf(p).unwrap();
            let back = d.cdf(x).unwrap();
            assert!((back - p).abs() <= 1e-9 * p.max(1e-3), "{} p={p} got {back}", d.family());
        }
    }
}

#[test]
fn declared_moments_match_samples() {
    let n = 1_000_000;
    for (k, d) in families().into_iter().enumerate() {
        let mut rng = stream(11, &[k as u64]);
        let xs: Vec<f64> = (0..n).map(|_| d.from_standard_normal(rng.sample(StandardNormal))).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n as f64;
        let se_mean = (m2 / n as f64).sqrt();
        let se_var = ((m4 - m2 * m2) / n as f64).sqrt();
        assert!((mean - d.mean()).abs() < 3.0 * se_mean, "{} mean {mean} vs {}", d.family(), d.mean());
        assert!((m2 - d.std().powi(2)).abs() < 3.0 * se_var, "{} var {m2} vs {}", d.family(), d.std().powi(2));
    }
}

#[test]
fn transform_examples() {
    let (u, clamped) = D::gaussian(0.0, 1.0).unwrap().to_standard_normal(0.0).unwrap();
    assert_eq!(u, 0.0);
    assert!(!clamped);
    assert!(D::uniform(0.0, 1.0).unwrap().to_standard_normal(0.5).unwrap().0.abs() < 1e-15);
    let g = D::gumbel(3.5e4, 0.3).unwrap();
    assert!((g.cdf(3.5e4).unwrap() - 0.570376001675023).abs() < 1e-12);
    assert!((g.to_standard_normal(3.5e4).unwrap().0 - 0.17733151629463484).abs() < 1e-9);
    let ln = D::lognormal(355.0, 0.2).unwrap();
    assert!((ln.cdf(355.0).unwrap() - 0.5394392415572705).abs() < 1e-12);
}

#[test]
fn out_of_support_is_an_error() {
    assert!(D::lognormal(1.0, 0.1).unwrap().to_standard_normal(-1.0).is_err());
    assert!(D::uniform(0.0, 1.0).unwrap().to_standard_normal(1.5).is_err());
    assert!(D::gaussian(0.0, 1.0).unwrap().inv_cdf(1.0).is_err());
}

#[test]
fn extreme_tail_is_clamped_not_rejected() {
    let g = D::gumbel(3.5e4, 0.3).unwrap();
    let (u, clamped) = g.to_standard_normal(3.5e4 + 40.0 * g.std()).unwrap();
    assert!(clamped);
    assert!(u.is_finite() && u > 8.0);
}

#[test]
fn normal_cdf_values() {
    assert_eq!(norm_inv_cdf(0.5), 0.0);
    assert!((norm_cdf(-3.5) - 0.00023262907903552502).abs() < 1e-16);
    assert!((beta_from_pf(0.022750131948179195) - 2.0).abs() < 1e-9);
    assert!((pf_from_beta(3.5) - 0.00023262907903552502).abs() / 2.3263e-4 < 1e-9);
    assert_eq!(beta_from_pf(0.5), 0.0);
}

#[test]
fn lhs_strata() {
    let rv = RandomVector::new(vec![D::uniform(0.0, 1.0).unwrap()]).unwrap();
    let pts = lhs_sample(4, &rv, &mut stream(3, &[])).unwrap();
    let mut bins: Vec<usize> = pts.iter().map(|p| (p[0] * 4.0) as usize).collect();
    bins.sort();
    assert_eq!(bins, vec![0, 1, 2, 3]);

    let rv = RandomVector::new(vec![D::gaussian(1.0, 2.0).unwrap(), D::gumbel(10.0, 0.2).unwrap()]).unwrap();
    let a = lhs_sample(10, &rv, &mut stream(42, &[])).unwrap();
    let b = lhs_sample(10, &rv, &mut stream(42, &[])).unwrap();
    assert_eq!(a, b);
    for (j, m) in rv.marginals().iter().enumerate() {
        let mut bins: Vec<usize> = a.iter().map(|p| (m.cdf(p[j]).unwrap() * 10.0) as usize).collect();
        bins.sort();
        assert_eq!(bins, (0..10).collect::<Vec<_>>());
    }
}

proptest! {
    #[test]
    fn inverse_normal_relative_accuracy(e in -15.0f64..-std::f64::consts::LOG10_2) {
        let p = 10f64.powf(e);
        let x = norm_inv_cdf(p);
        prop_assert!((norm_cdf(x) - p).abs() <= 1e-9 * p);
    }

    #[test]
    fn transform_round_trip(u in prop::collection::vec(-6.0f64..6.0, 5)) {
        let rv = RandomVector::new(families()).unwrap();
        let x = rv.from_standard_normal(&u);
        let (back, _) = rv.to_standard_normal(&x).unwrap();
        for (a, b) in u.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
        }
    }

    #[test]
    fn beta_round_trip(beta in -5.0f64..8.0) {
        let back = beta_from_pf(pf_from_beta(beta));
        prop_assert!((back - beta).abs() <= 1e-9 * beta.abs().max(1e-3));
    }
}
