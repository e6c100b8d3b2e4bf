//! Standard normal density, distribution and quantile functions.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// 1 / sqrt(2 pi)
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * x * x)
}

/// Standard normal CDF, accurate in both tails.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 - Phi(x)` without cancellation.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

// Acklam's rational approximation, relative error ~1.15e-9 before refinement.
const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

fn acklam(p: f64) -> f64 {
    if p < P_LOW {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -acklam(1.0 - p)
    }
}

/// Inverse standard normal CDF for `p` in the open unit interval.
///
/// Returns NaN outside `(0, 1)`. The lower half is solved directly and
/// the upper half by symmetry, so `p` close to 1 loses only the precision
/// already lost in forming `1 - p`.
pub fn norm_inv_cdf(p: f64) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return f64::NAN;
    }
    if p > 0.5 {
        return -norm_inv_sf_lower(1.0 - p);
    }
    norm_inv_sf_lower(p)
}

/// Quantile of the lower tail, `p <= 0.5`, with one Halley step.
fn norm_inv_sf_lower(p: f64) -> f64 {
    let x = acklam(p);
    let e = norm_cdf(x) - p;
    let u = e * libm::sqrt(2.0 * PI) * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

/// `Phi^{-1}(1 - q)` computed from the upper-tail probability `q`.
pub fn norm_inv_sf(q: f64) -> f64 {
    -norm_inv_cdf(q)
}

/// Generalized reliability index `-Phi^{-1}(pf)`; `+inf` for `pf <= 0`,
/// `-inf` for `pf >= 1`.
pub fn beta_from_pf(pf: f64) -> f64 {
    if pf <= 0.0 {
        f64::INFINITY
    } else if pf >= 1.0 {
        f64::NEG_INFINITY
    } else {
        -norm_inv_cdf(pf)
    }
}

/// Failure probability `Phi(-beta)`.
pub fn pf_from_beta(beta: f64) -> f64 {
    norm_cdf(-beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Frozen from a 30-digit mpmath evaluation of ncdf.
    #[test]
    fn cdf_reference_values() {
        // mpmath: ncdf(-3.5) = 2.3262907903552504e-4
        assert!((norm_cdf(-3.5) - 2.326_290_790_355_250_4e-4).abs() < 1e-16);
        // ncdf(-2) = 0.022750131948179207
        assert!((norm_cdf(-2.0) - 0.022_750_131_948_179_207).abs() < 1e-16);
        assert_eq!(norm_cdf(0.0), 0.5);
    }

    #[test]
    fn inv_cdf_median_and_symmetry() {
        assert_eq!(norm_inv_cdf(0.5), 0.0);
        for &p in &[1e-5, 0.01, 0.2, 0.4] {
            let a = norm_inv_cdf(p);
            let b = norm_inv_cdf(1.0 - p);
            assert!((a + b).abs() < 1e-7 * a.abs().max(1.0), "{p}: {a} {b}");
        }
    }

    #[test]
    fn inv_cdf_relative_accuracy() {
        let mut p = 1e-15;
        while p < 0.5 {
            let x = norm_inv_cdf(p);
            let back = norm_cdf(x);
            assert!(((back - p) / p).abs() < 1e-9, "p={p} back={back}");
            p *= 1.7;
        }
        for &p in &[1e-7, 1e-3, 0.5, 1.0 - 1e-3] {
            assert!((norm_cdf(norm_inv_cdf(p)) - p).abs() < 1e-9 * p.max(1e-300) + 1e-15);
        }
    }

    #[test]
    fn inv_cdf_rejects_out_of_range() {
        assert!(norm_inv_cdf(0.0).is_nan());
        assert!(norm_inv_cdf(1.0).is_nan());
        assert!(norm_inv_cdf(-0.1).is_nan());
    }

    #[test]
    fn beta_pf_conversions() {
        assert_eq!(beta_from_pf(0.5), 0.0);
        assert!((beta_from_pf(2.275e-2) - 2.0).abs() < 1e-3);
        assert!((pf_from_beta(3.5) - 2.3263e-4).abs() < 1e-8);
        assert_eq!(beta_from_pf(0.0), f64::INFINITY);
        for &b in &[-2.0, 0.3, 1.0, 3.0, 5.5, 7.0] {
            let rt = beta_from_pf(pf_from_beta(b));
            assert!(((rt - b) / b).abs() < 1e-9, "{b} -> {rt}");
        }
    }
}
