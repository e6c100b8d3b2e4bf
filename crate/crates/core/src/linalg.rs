//! Small dense kernels on row-major buffers. The hot paths (Kriging
//! likelihood, prediction, least squares) call these directly; spectral
//! diagnostics go through nalgebra.

use alloc::vec::Vec;

/// In-place Cholesky `A = L L^T` of a row-major `n x n` SPD matrix; only the
/// lower triangle is read and the strict upper triangle is zeroed.
/// Returns `false` when a pivot is not positive.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    debug_assert_eq!(a.len(), n * n);
    for j in 0..n {
        let row_j = &mut a[j * n..(j + 1) * n];
        let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
        if !(d > 0.0 && d.is_finite()) {
            return false;
        }
        let d = libm::sqrt(d);
        row_j[j] = d;
        for v in row_j[j + 1..].iter_mut() {
            *v = 0.0;
        }
        for i in j + 1..n {
            let (upper, lower) = a.split_at_mut(i * n);
            let row_j = &upper[j * n..j * n + j];
            let row_i = &mut lower[..n];
            let s = row_i[j] - dot(&row_i[..j], row_j);
            row_i[j] = s / d;
        }
    }
    true
}

/// Solves `L x = b` in place.
pub fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let row = &l[i * n..i * n + i];
        let mut s = b[i];
        for (lk, bk) in row.iter().zip(&b[..i]) {
            s -= lk * bk;
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solves `L^T x = b` in place.
pub fn solve_lower_transpose(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let xi = b[i] / l[i * n + i];
        b[i] = xi;
        for k in 0..i {
            b[k] -= l[i * n + k] * xi;
        }
    }
}

/// Solves `A x = b` given the Cholesky factor of `A`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    solve_lower(l, n, b);
    solve_lower_transpose(l, n, b);
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Eigenvalues of a symmetric row-major matrix, ascending.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let m = nalgebra::DMatrix::from_row_slice(n, n, a);
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// 2-norm condition number of a symmetric matrix.
pub fn condition_number(a: &[f64], n: usize) -> f64 {
    let ev = symmetric_eigenvalues(a, n);
    let lo = ev.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let hi = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Ordinary least squares `min |X c - y|` through the normal equations with a
/// relative ridge fallback. `x` is row-major `n x p`. Returns the
/// coefficients, the Cholesky factor of the (possibly regularized) Gram
/// matrix, and whether the ridge was needed.
pub fn least_squares(x: &[f64], n: usize, p: usize, y: &[f64], ridge: f64) -> Option<(Vec<f64>, Vec<f64>, bool)> {
    let mut g = alloc::vec![0.0; p * p];
    let mut rhs = alloc::vec![0.0; p];
    for r in 0..n {
        let row = &x[r * p..(r + 1) * p];
        for i in 0..p {
            let xi = row[i];
            rhs[i] += xi * y[r];
            for j in 0..=i {
                g[i * p + j] += xi * row[j];
            }
        }
    }
    let mut l = g.clone();
    let mut regularized = false;
    if !cholesky_in_place(&mut l, p) {
        regularized = true;
        let scale = (0..p).map(|i| g[i * p + i]).fold(0.0f64, f64::max).max(1.0);
        l.copy_from_slice(&g);
        for i in 0..p {
            l[i * p + i] += ridge * scale;
        }
        if !cholesky_in_place(&mut l, p) {
            return None;
        }
    }
    cholesky_solve(&l, p, &mut rhs);
    Some((rhs, l, regularized))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip() {
        let a = [4.0, 2.0, 0.4, 2.0, 5.0, 1.0, 0.4, 1.0, 3.0];
        let mut l = a;
        assert!(cholesky_in_place(&mut l, 3));
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((s - a[i * 3 + j]).abs() < 1e-12);
            }
        }
        let mut b = [1.0, 2.0, 3.0];
        cholesky_solve(&l, 3, &mut b);
        for i in 0..3 {
            let s: f64 = (0..3).map(|k| a[i * 3 + k] * b[k]).sum();
            assert!((s - (i + 1) as f64).abs() < 1e-12);
        }
        let mut bad = [1.0, 2.0, 2.0, 1.0];
        assert!(!cholesky_in_place(&mut bad, 2));
    }

    #[test]
    fn least_squares_exact_line() {
        let x: Vec<f64> = (0..5).flat_map(|i| [1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let (c, _, reg) = least_squares(&x, 5, 2, &y, 1e-8).unwrap();
        assert!(!reg);
        assert!((c[0] - 2.0).abs() < 1e-10 && (c[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn condition_of_diagonal() {
        let a = [2.0, 0.0, 0.0, 0.5];
        assert!((condition_number(&a, 2) - 4.0).abs() < 1e-12);
    }
}
