//! Singular values and Hermitian extreme eigenpairs.

use num_complex::Complex64;

use super::factor::{upper_adjoint_solve_in_place, upper_solve_in_place};
use super::{is_upper_triangular, CMatrix, CVector};

/// Dimension up to which `smallest_singular_value` always uses a full SVD.
pub const SIGMIN_DENSE_LIMIT: usize = 64;

const INVERSE_ITERATIONS: usize = 300;

/// All singular values (unsorted order is not guaranteed; callers sort if needed).
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().copied().collect()
}

/// Spectral norm `||M||_2`.
pub fn norm2(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().fold(0.0, f64::max)
}

/// `sigma_min(M)` for a square matrix. Triangular inputs above
/// [`SIGMIN_DENSE_LIMIT`] use inverse iteration on `(T* T)^{-1}`.
pub fn smallest_singular_value(m: &CMatrix) -> f64 {
    if m.nrows() > SIGMIN_DENSE_LIMIT && is_upper_triangular(m) {
        return smallest_singular_value_triangular(m);
    }
    dense_sigmin(m)
}

fn dense_sigmin(m: &CMatrix) -> f64 {
    singular_values(m).into_iter().fold(f64::INFINITY, f64::min).max(0.0)
}

/// Inverse iteration with two triangular solves per step. Falls back to the
/// full SVD when the iteration has not settled after a fixed budget.
pub fn smallest_singular_value_triangular(t: &CMatrix) -> f64 {
    let n = t.nrows();
    if n == 0 {
        return 0.0;
    }
    if (0..n).any(|i| t[(i, i)] == Complex64::new(0.0, 0.0)) {
        return 0.0;
    }
    // deterministic start with varying entries to avoid orthogonality accidents
    let mut x: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * ((i * 7) % 11) as f64, 0.05 * ((i * 3) % 5) as f64))
        .collect();
    normalize(&mut x);
    let mut prev = f64::INFINITY;
    for it in 0..INVERSE_ITERATIONS {
        upper_adjoint_solve_in_place(t, &mut x);
        let w = norm(&x);
        if !w.is_finite() {
            return 0.0;
        }
        upper_solve_in_place(t, &mut x);
        let z = norm(&x);
        if !z.is_finite() || z == 0.0 {
            return 0.0;
        }
        // Rayleigh estimate of lambda_max((T* T)^{-1}) is ||T^{-*} x||^2
        let est = 1.0 / w;
        for v in x.iter_mut() {
            *v /= z;
        }
        if it > 2 && (prev - est).abs() <= 1e-14 * est {
            return est;
        }
        prev = est;
    }
    dense_sigmin(t)
}

fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(x: &mut [Complex64]) {
    let n = norm(x);
    for v in x.iter_mut() {
        *v /= n;
    }
}

/// Largest eigenvalue and a unit eigenvector of a Hermitian matrix.
pub fn hermitian_max_eig(h: &CMatrix) -> (f64, CVector) {
    let herm = (h + h.adjoint()).map(|z| z * 0.5);
    let eig = herm.symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let v = eig.eigenvectors.column(idx).into_owned();
    (val, v)
}
