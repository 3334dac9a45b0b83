//! Dense complex linear-algebra kernels.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The Schur factorization,
//! eigenvalue reordering, matrix exponential, QR and Cholesky factorizations
//! are implemented here; nalgebra supplies storage, SVD, LU and the Hermitian
//! eigensolver.

mod expm;
mod factor;
mod schur;
mod svd;

pub use expm::expm;
pub use factor::{
    cholesky, cholesky_with_tol, condition_estimate, invert_upper_triangular, lu_solve, qr_economy,
    solve_lower_triangular, solve_upper_triangular, solve_upper_triangular_adjoint, LuFactor, Qr,
};
pub use schur::{eigenvalues, hessenberg, reorder_schur, schur, SchurForm};
pub(crate) use schur::reorder_by_flags;
pub use svd::{
    hermitian_max_eig, norm2, singular_values, smallest_singular_value,
    smallest_singular_value_triangular, SIGMIN_DENSE_LIMIT,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const EPS: f64 = f64::EPSILON;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Numerical tolerances used by the factorization checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub unitary: f64,
    pub recon: f64,
    /// Multiplier of machine epsilon; the rank threshold is `rank * n * eps * ||M||`.
    pub rank: f64,
    pub solve: f64,
    pub herm: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unitary: 1e-12,
            recon: 1e-12,
            rank: 1.0,
            solve: 1e-12,
            herm: 1e-12,
        }
    }
}

/// Build a complex matrix from row-major real entries.
pub fn from_real_rows(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    assert_eq!(data.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| re(data[i * cols + j]))
}

/// Reject matrices with NaN or infinite entries.
pub fn check_finite(m: &CMatrix) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn check_square(m: &CMatrix, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 {
        return Err(Error::Dimension(format!("{what} is empty")));
    }
    Ok(())
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Max-column-sum norm.
pub fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `||M* M - I||_F`.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let k = m.ncols();
    let g = m.adjoint() * m;
    frobenius(&(g - CMatrix::identity(k, k)))
}

pub fn is_upper_triangular(m: &CMatrix) -> bool {
    (0..m.ncols()).all(|j| (j + 1..m.nrows()).all(|i| m[(i, j)] == Complex64::new(0.0, 0.0)))
}

/// `M + shift * I`.
pub fn shift_diagonal(m: &CMatrix, shift: Complex64) -> CMatrix {
    let mut out = m.clone();
    for i in 0..m.nrows().min(m.ncols()) {
        out[(i, i)] += shift;
    }
    out
}

/// Hermitian part `(M + M*)/2`.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).map(|z| z * 0.5)
}

/// Diagonal of an upper-triangular `T` with rounding-level clusters replaced
/// by their means.
///
/// A defective eigenvalue of multiplicity `k` is resolved by a backward
/// stable method only to about `(eps ||T||)^(1/k)`, while the mean of the
/// cluster (the trace of the invariant block over `k`) stays accurate to
/// `eps ||T||`. Entries are clustered (single linkage) when closer than
/// `4 sqrt(eps ||T||_F dep)`, with `dep` the Frobenius norm of the strictly
/// upper part; for normal `T` (`dep = 0`) nothing is merged.
pub fn cluster_diagonal(t: &CMatrix) -> Vec<Complex64> {
    let n = t.nrows();
    let diag: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut dep2 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            dep2 += t[(i, j)].norm_sqr();
        }
    }
    let tol = 4.0 * (EPS * frobenius(t) * dep2.sqrt()).sqrt();
    if tol == 0.0 {
        return diag;
    }
    // union-find over close pairs
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if (diag[i] - diag[j]).norm() <= tol {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a] = b;
            }
        }
    }
    let mut sums = vec![(Complex64::new(0.0, 0.0), 0usize); n];
    for (i, &d) in diag.iter().enumerate() {
        let r = root(&mut parent, i);
        sums[r].0 += d;
        sums[r].1 += 1;
    }
    (0..n)
        .map(|i| {
            let (s, c) = sums[root(&mut parent, i)];
            s / c as f64
        })
        .collect()
}

/// Sort complex numbers by real part then imaginary part, for multiset comparisons.
pub fn sort_complex(v: &mut [Complex64]) {
    v.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.im.partial_cmp(&b.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}

/// Largest distance between two equally sized multisets under an optimal-ish greedy
/// matching (each element of `a` takes the nearest unused element of `b`).
pub fn multiset_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    // match the elements with the fewest close partners first
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| {
        let di = b.iter().map(|z| (z - a[i]).norm()).fold(f64::INFINITY, f64::min);
        let dj = b.iter().map(|z| (z - a[j]).norm()).fold(f64::INFINITY, f64::min);
        dj.partial_cmp(&di).unwrap_or(std::cmp::Ordering::Equal)
    });
    for i in order {
        let mut best = None;
        let mut best_d = f64::INFINITY;
        for (j, z) in b.iter().enumerate() {
            if !used[j] {
                let d = (z - a[i]).norm();
                if d < best_d {
                    best_d = d;
                    best = Some(j);
                }
            }
        }
        if let Some(j) = best {
            used[j] = true;
            worst = worst.max(best_d);
        }
    }
    worst
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn clusters_average_defective_pairs_only() {
        let mut t = from_real_rows(3, 3, &[-1.0, 10.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        t[(0, 0)] += c64(1e-8, 0.0);
        t[(1, 1)] -= c64(1e-8, 0.0);
        let d = super::cluster_diagonal(&t);
        assert!((d[0] - c64(-1.0, 0.0)).norm() < 1e-15 && (d[1] - c64(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(d[2], c64(2.0, 0.0));
        // a normal matrix keeps its computed diagonal exactly
        let mut n = CMatrix::zeros(2, 2);
        n[(0, 0)] = c64(1.0, 0.0);
        n[(1, 1)] = c64(1.0 + 1e-12, 0.0);
        assert_eq!(super::cluster_diagonal(&n), vec![n[(0, 0)], n[(1, 1)]]);
    }

    pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| {
            c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }
}
