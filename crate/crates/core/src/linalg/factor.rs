//! QR, Cholesky, LU and triangular solves.

use nalgebra::LU;
use num_complex::Complex64;

use super::{check_finite, check_square, frobenius, norm1, CMatrix, CVector, EPS};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Economy QR factors `M = Z S`, `Z` with orthonormal columns, `S` upper
/// triangular with real nonnegative diagonal.
#[derive(Debug, Clone)]
pub struct Qr {
    pub z: CMatrix,
    pub s: CMatrix,
}

/// Householder economy QR of an `m x k` matrix with `m >= k`.
///
/// Fails with [`Error::RankDeficient`] when a diagonal entry of `S` falls below
/// `m * eps * ||M||_F`.
pub fn qr_economy(m: &CMatrix) -> Result<Qr> {
    let (rows, k) = m.shape();
    if rows < k || k == 0 {
        return Err(Error::Dimension(format!(
            "economy QR needs rows >= cols > 0, got {rows}x{k}"
        )));
    }
    check_finite(m)?;
    let mnorm = frobenius(m);
    let mut a = m.clone();
    let mut reflectors: Vec<(Vec<Complex64>, f64)> = Vec::with_capacity(k);
    for j in 0..k {
        let xnorm = (j..rows).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        let x0 = a[(j, j)];
        let phase = if x0 == ZERO { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        let mut v: Vec<Complex64> = (j..rows).map(|i| a[(i, j)]).collect();
        v[0] -= alpha;
        let vn2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let beta = if vn2 == 0.0 { 0.0 } else { 2.0 / vn2 };
        if beta != 0.0 {
            for c in j..k {
                let mut dot = ZERO;
                for (idx, vi) in v.iter().enumerate() {
                    dot += vi.conj() * a[(j + idx, c)];
                }
                dot *= beta;
                for (idx, vi) in v.iter().enumerate() {
                    a[(j + idx, c)] -= vi * dot;
                }
            }
        }
        reflectors.push((v, beta));
    }
    let mut s = CMatrix::zeros(k, k);
    for j in 0..k {
        for i in 0..=j {
            s[(i, j)] = a[(i, j)];
        }
    }
    // Z = H_0 H_1 ... H_{k-1} [I; 0]
    let mut z = CMatrix::zeros(rows, k);
    for j in 0..k {
        z[(j, j)] = Complex64::new(1.0, 0.0);
    }
    for j in (0..k).rev() {
        let (v, beta) = &reflectors[j];
        if *beta == 0.0 {
            continue;
        }
        for c in 0..k {
            let mut dot = ZERO;
            for (idx, vi) in v.iter().enumerate() {
                dot += vi.conj() * z[(j + idx, c)];
            }
            dot *= *beta;
            for (idx, vi) in v.iter().enumerate() {
                z[(j + idx, c)] -= vi * dot;
            }
        }
    }
    let tol = rows as f64 * EPS * mnorm;
    for j in 0..k {
        let d = s[(j, j)];
        let ad = d.norm();
        if ad <= tol || mnorm == 0.0 {
            return Err(Error::RankDeficient { column: j, value: ad });
        }
        let p = d / ad;
        for c in j..k {
            s[(j, c)] *= p.conj();
        }
        s[(j, j)] = Complex64::new(ad, 0.0);
        for i in 0..rows {
            z[(i, j)] *= p;
        }
    }
    Ok(Qr { z, s })
}

/// Cholesky factor `R` (upper triangular, positive diagonal) with `H = R* R`,
/// using the default Hermitian tolerance `1e-12 * ||H||_F`.
pub fn cholesky(h: &CMatrix) -> Result<CMatrix> {
    cholesky_with_tol(h, 1e-12)
}

pub fn cholesky_with_tol(h: &CMatrix, herm_tol: f64) -> Result<CMatrix> {
    check_square(h, "Cholesky input")?;
    check_finite(h)?;
    let n = h.nrows();
    let defect = frobenius(&(h - h.adjoint()));
    if defect > herm_tol * frobenius(h) {
        return Err(Error::NotHermitian { defect });
    }
    let mut r = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = h[(j, j)].re;
        for i in 0..j {
            diag -= r[(i, j)].norm_sqr();
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, value: diag });
        }
        let rjj = diag.sqrt();
        r[(j, j)] = Complex64::new(rjj, 0.0);
        for c in j + 1..n {
            let mut acc = h[(j, c)];
            for i in 0..j {
                acc -= r[(i, j)].conj() * r[(i, c)];
            }
            r[(j, c)] = acc / rjj;
        }
    }
    Ok(r)
}

fn triangular_tol(t: &CMatrix) -> f64 {
    let maxabs = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    t.nrows() as f64 * EPS * maxabs
}

fn check_diagonal(t: &CMatrix) -> Result<()> {
    let tol = triangular_tol(t);
    for i in 0..t.nrows() {
        let p = t[(i, i)].norm();
        if p <= tol || p == 0.0 {
            return Err(Error::Singular { index: i, pivot: p });
        }
    }
    Ok(())
}

fn check_rhs(t: &CMatrix, b: &CMatrix) -> Result<()> {
    check_square(t, "triangular matrix")?;
    if b.nrows() != t.nrows() {
        return Err(Error::Dimension(format!(
            "right-hand side has {} rows, matrix is {}x{}",
            b.nrows(),
            t.nrows(),
            t.ncols()
        )));
    }
    Ok(())
}

/// Solve `U x = b` in place (no singularity check).
pub(crate) fn upper_solve_in_place(u: &CMatrix, x: &mut [Complex64]) {
    let n = u.nrows();
    for i in (0..n).rev() {
        let mut acc = x[i];
        for j in i + 1..n {
            acc -= u[(i, j)] * x[j];
        }
        x[i] = acc / u[(i, i)];
    }
}

/// Solve `U* x = b` in place (no singularity check).
pub(crate) fn upper_adjoint_solve_in_place(u: &CMatrix, x: &mut [Complex64]) {
    let n = u.nrows();
    for i in 0..n {
        // column i of U holds row i of U*
        let col = u.column(i);
        let mut acc = x[i];
        for j in 0..i {
            acc -= col[j].conj() * x[j];
        }
        x[i] = acc / u[(i, i)].conj();
    }
}

/// Solve `U X = B` for upper-triangular `U`.
pub fn solve_upper_triangular(u: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_rhs(u, b)?;
    check_diagonal(u)?;
    let mut x = b.clone();
    for c in 0..x.ncols() {
        let mut col: Vec<Complex64> = x.column(c).iter().copied().collect();
        upper_solve_in_place(u, &mut col);
        x.column_mut(c).copy_from_slice(&col);
    }
    Ok(x)
}

/// Solve `U* X = B` for upper-triangular `U`.
pub fn solve_upper_triangular_adjoint(u: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_rhs(u, b)?;
    check_diagonal(u)?;
    let mut x = b.clone();
    for c in 0..x.ncols() {
        let mut col: Vec<Complex64> = x.column(c).iter().copied().collect();
        upper_adjoint_solve_in_place(u, &mut col);
        x.column_mut(c).copy_from_slice(&col);
    }
    Ok(x)
}

/// Solve `L X = B` for lower-triangular `L`.
pub fn solve_lower_triangular(l: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    check_rhs(l, b)?;
    check_diagonal(l)?;
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..x.ncols() {
        for i in 0..n {
            let mut acc = x[(i, c)];
            for j in 0..i {
                acc -= l[(i, j)] * x[(j, c)];
            }
            x[(i, c)] = acc / l[(i, i)];
        }
    }
    Ok(x)
}

/// Inverse of an upper-triangular matrix (itself upper triangular).
pub fn invert_upper_triangular(u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    let mut inv = solve_upper_triangular(u, &CMatrix::identity(n, n))?;
    for j in 0..n {
        for i in j + 1..n {
            inv[(i, j)] = ZERO;
        }
    }
    Ok(inv)
}

/// Partial-pivoting LU factorization kept for repeated solves.
#[derive(Debug, Clone)]
pub struct LuFactor {
    lu: LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl LuFactor {
    pub fn new(a: &CMatrix) -> Result<Self> {
        check_square(a, "LU input")?;
        check_finite(a)?;
        let lu = LU::new(a.clone());
        let u = lu.u();
        let tol = triangular_tol(&u);
        for i in 0..u.nrows() {
            let p = u[(i, i)].norm();
            if p <= tol || p == 0.0 {
                return Err(Error::Singular { index: i, pivot: p });
            }
        }
        Ok(LuFactor { lu })
    }

    pub fn dim(&self) -> usize {
        self.lu.l().nrows()
    }

    pub fn solve(&self, b: &CMatrix) -> Result<CMatrix> {
        if b.nrows() != self.dim() {
            return Err(Error::Dimension(format!(
                "right-hand side has {} rows, expected {}",
                b.nrows(),
                self.dim()
            )));
        }
        self.lu
            .solve(b)
            .ok_or(Error::Singular { index: 0, pivot: 0.0 })
    }

    pub fn solve_vec(&self, b: &CVector) -> Result<CVector> {
        if b.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "right-hand side has length {}, expected {}",
                b.len(),
                self.dim()
            )));
        }
        self.lu
            .solve(b)
            .ok_or(Error::Singular { index: 0, pivot: 0.0 })
    }
}

/// Solve `A X = B` with partial pivoting.
pub fn lu_solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    LuFactor::new(a)?.solve(b)
}

/// 2-norm condition number estimate of a square matrix; `+inf` when singular.
/// Exact (SVD ratio) up to dimension 300, Hager's 1-norm estimator above.
pub fn condition_estimate(a: &CMatrix) -> f64 {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || check_finite(a).is_err() {
        return f64::INFINITY;
    }
    if n <= 300 {
        let sv = super::singular_values(a);
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        return if smin == 0.0 { f64::INFINITY } else { smax / smin };
    }
    let lu = match LuFactor::new(a) {
        Ok(lu) => lu,
        Err(_) => return f64::INFINITY,
    };
    norm1(a) * hager_inverse_norm1(&lu, n)
}

/// Hager's estimator of `||A^{-1}||_1` from an LU factorization.
fn hager_inverse_norm1(lu: &LuFactor, n: usize) -> f64 {
    let mut x = CVector::from_element(n, Complex64::new(1.0 / n as f64, 0.0));
    let mut est = 0.0;
    for _ in 0..5 {
        let y = match lu.solve_vec(&x) {
            Ok(y) => y,
            Err(_) => return f64::INFINITY,
        };
        let ynorm: f64 = y.iter().map(|z| z.norm()).sum();
        if ynorm <= est {
            break;
        }
        est = ynorm;
        let xi = y.map(|z| if z == ZERO { Complex64::new(1.0, 0.0) } else { z / z.norm() });
        let mut z = xi.clone();
        if !solve_adjoint(&lu.lu, &mut z) {
            return f64::INFINITY;
        }
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, 0.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        let zx: f64 = z.iter().zip(x.iter()).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= zx {
            break;
        }
        x = CVector::zeros(n);
        x[jmax] = Complex64::new(1.0, 0.0);
    }
    est
}

/// Solve `A* w = b` in place from `P A = L U`: `U* L* P w = b`.
fn solve_adjoint(lu: &LU<Complex64, nalgebra::Dyn, nalgebra::Dyn>, w: &mut CVector) -> bool {
    let u = lu.u();
    let l = lu.l();
    let n = u.nrows();
    let mut v: Vec<Complex64> = w.iter().copied().collect();
    upper_adjoint_solve_in_place(&u, &mut v);
    // L* is upper triangular with unit diagonal
    for i in (0..n).rev() {
        let mut acc = v[i];
        for j in i + 1..n {
            acc -= l[(j, i)].conj() * v[j];
        }
        v[i] = acc;
    }
    let mut out = CVector::from_vec(v);
    lu.p().inv_permute_rows(&mut out);
    if out.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return false;
    }
    *w = out;
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::random_matrix;
    use crate::linalg::{c64, from_real_rows, unitarity_defect};
    use proptest::prelude::*;

    fn random_upper(n: usize, seed: u64) -> CMatrix {
        let mut t = random_matrix(n, n, seed);
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = ZERO;
            }
            t[(j, j)] += c64(2.0, 0.0);
        }
        t
    }

    #[test]
    fn qr_of_orthonormal_columns() {
        let m = from_real_rows(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let qr = qr_economy(&m).unwrap();
        assert!(frobenius(&(&qr.s - CMatrix::identity(2, 2))) < 1e-15);
        assert!(frobenius(&(&qr.z - &m)) < 1e-15);
    }

    #[test]
    fn qr_single_column() {
        let m = from_real_rows(2, 1, &[2.0, 0.0]);
        let qr = qr_economy(&m).unwrap();
        assert!((qr.s[(0, 0)] - c64(2.0, 0.0)).norm() < 1e-15);
        assert!((qr.z[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!(qr.z[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn qr_random_seven_by_three() {
        let m = random_matrix(7, 3, 5);
        let qr = qr_economy(&m).unwrap();
        assert!(unitarity_defect(&qr.z) < 1e-12 * 3.0);
        assert!(frobenius(&(&qr.z * &qr.s - &m)) < 1e-12 * frobenius(&m));
        for j in 0..3 {
            assert!(qr.s[(j, j)].im == 0.0 && qr.s[(j, j)].re > 0.0);
        }
    }

    #[test]
    fn qr_rank_deficient_names_column() {
        let m = from_real_rows(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        match qr_economy(&m) {
            Err(Error::RankDeficient { column, .. }) => assert_eq!(column, 1),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn cholesky_examples() {
        let r = cholesky(&CMatrix::identity(3, 3)).unwrap();
        assert_eq!(r, CMatrix::identity(3, 3));
        let r = cholesky(&from_real_rows(2, 2, &[4.0, 0.0, 0.0, 9.0])).unwrap();
        assert!(frobenius(&(r - from_real_rows(2, 2, &[2.0, 0.0, 0.0, 3.0]))) < 1e-15);
    }

    #[test]
    fn cholesky_random_gram() {
        let b = random_matrix(6, 6, 9);
        let h = b.adjoint() * &b + CMatrix::identity(6, 6);
        let r = cholesky(&h).unwrap();
        assert!(frobenius(&(r.adjoint() * &r - &h)) < 1e-12 * frobenius(&h));
    }

    #[test]
    fn cholesky_indefinite_names_pivot() {
        let h = from_real_rows(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        match cholesky(&h) {
            Err(Error::NotPositiveDefinite { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected failure, got {other:?}"),
        }
        let nonherm = from_real_rows(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(cholesky(&nonherm), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn triangular_examples() {
        let b = from_real_rows(2, 1, &[2.0, 4.0]);
        let x = solve_upper_triangular(&CMatrix::identity(2, 2), &b).unwrap();
        assert_eq!(x, b);
        let d = from_real_rows(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let x = solve_upper_triangular(&d, &b).unwrap();
        assert!(frobenius(&(x - from_real_rows(2, 1, &[1.0, 1.0]))) < 1e-15);
    }

    #[test]
    fn triangular_random_residuals() {
        let t = random_upper(10, 21);
        let b = random_matrix(10, 1, 22);
        let x = solve_upper_triangular(&t, &b).unwrap();
        let scale = frobenius(&t) * frobenius(&x);
        assert!(frobenius(&(&t * &x - &b)) < 1e-13 * scale);
        let x = solve_upper_triangular_adjoint(&t, &b).unwrap();
        assert!(frobenius(&(t.adjoint() * &x - &b)) < 1e-13 * scale.max(frobenius(&t) * frobenius(&x)));
        let l = t.adjoint();
        let x = solve_lower_triangular(&l, &b).unwrap();
        assert!(frobenius(&(&l * &x - &b)) < 1e-13 * frobenius(&l) * frobenius(&x));
        let inv = invert_upper_triangular(&t).unwrap();
        assert!(frobenius(&(&t * inv - CMatrix::identity(10, 10))) < 1e-12);
    }

    #[test]
    fn singular_triangular_reports_index() {
        let t = from_real_rows(3, 3, &[1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let b = CMatrix::identity(3, 1);
        match solve_upper_triangular(&t, &b) {
            Err(Error::Singular { index, .. }) => assert_eq!(index, 1),
            other => panic!("expected singular, got {other:?}"),
        }
    }

    #[test]
    fn lu_random_and_singular() {
        let a = random_matrix(8, 8, 4);
        let b = random_matrix(8, 2, 5);
        let x = lu_solve(&a, &b).unwrap();
        assert!(frobenius(&(&a * &x - &b)) < 1e-12 * frobenius(&a) * frobenius(&x));
        let s = from_real_rows(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(lu_solve(&s, &CMatrix::identity(2, 1)), Err(Error::Singular { .. })));
    }

    #[test]
    fn condition_of_diagonal() {
        let d = from_real_rows(2, 2, &[1.0, 0.0, 0.0, 1e-3]);
        assert!((condition_estimate(&d) - 1e3).abs() < 1e-9);
        assert!(condition_estimate(&from_real_rows(2, 2, &[1.0, 0.0, 0.0, 0.0])).is_infinite());
    }

    #[test]
    fn hager_estimate_is_close_for_large_matrices() {
        let n = 320;
        let a = random_matrix(n, n, 77) + CMatrix::identity(n, n) * c64(20.0, 0.0);
        let est = condition_estimate(&a);
        let sv = crate::linalg::singular_values(&a);
        let exact = sv.iter().copied().fold(0.0, f64::max) / sv.iter().copied().fold(f64::INFINITY, f64::min);
        // 1-norm based estimate is within a factor n of the 2-norm condition number
        assert!(est > exact / n as f64 && est < exact * n as f64, "est {est} exact {exact}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn qr_and_cholesky_reconstruct(seed in 0u64..10_000, n in 2usize..=20) {
            let m = random_matrix(n + 3, n, seed);
            let qr = qr_economy(&m).unwrap();
            prop_assert!(unitarity_defect(&qr.z) <= 1e-12 * n as f64);
            prop_assert!(frobenius(&(&qr.z * &qr.s - &m)) <= 1e-12 * frobenius(&m));
            let b = random_matrix(n, n, seed + 1);
            let h = b.adjoint() * &b + CMatrix::identity(n, n);
            let r = cholesky(&h).unwrap();
            prop_assert!(frobenius(&(r.adjoint() * &r - &h)) <= 1e-12 * frobenius(&h));
        }
    }
}
