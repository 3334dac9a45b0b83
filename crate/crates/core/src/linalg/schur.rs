//! Complex Schur factorization `M = Q T Q*` by Householder reduction to
//! Hessenberg form followed by single-shift QR sweeps, plus reordering of the
//! diagonal of `T` with adjacent Givens swaps.

use num_complex::Complex64;

use super::{check_finite, check_square, frobenius, CMatrix, EPS};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Unitary `q` and upper-triangular `t` with `M = q t q*`.
#[derive(Debug, Clone)]
pub struct SchurForm {
    pub q: CMatrix,
    pub t: CMatrix,
    /// Diagnostics collected while reordering (ill-conditioned swaps).
    pub warnings: Vec<String>,
}

impl SchurForm {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }

    /// `Q T Q*`.
    pub fn reconstruct(&self) -> CMatrix {
        &self.q * &self.t * self.q.adjoint()
    }
}

/// Plane rotation `[c s; -conj(s) c]` mapping `(f, g)` to `(r, 0)`.
#[inline]
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64, Complex64) {
    if g == ZERO {
        return (1.0, ZERO, f);
    }
    if f == ZERO {
        let ag = g.norm();
        return (0.0, g.conj() / ag, Complex64::new(ag, 0.0));
    }
    let af = f.norm();
    let ag = g.norm();
    let nrm = af.hypot(ag);
    let phase = f / af;
    (af / nrm, phase * g.conj() / nrm, phase * nrm)
}

/// Apply the rotation to rows `i`, `i+1` over the given column range.
#[inline]
fn rotate_rows(m: &mut CMatrix, i: usize, c: f64, s: Complex64, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = m[(i, j)];
        let y = m[(i + 1, j)];
        m[(i, j)] = x * c + s * y;
        m[(i + 1, j)] = y * c - s.conj() * x;
    }
}

/// Multiply columns `j`, `j+1` on the right by the adjoint of the rotation.
#[inline]
fn rotate_cols(m: &mut CMatrix, j: usize, c: f64, s: Complex64, rows: std::ops::Range<usize>) {
    let sc = s.conj();
    for i in rows {
        let x = m[(i, j)];
        let y = m[(i, j + 1)];
        m[(i, j)] = x * c + sc * y;
        m[(i, j + 1)] = y * c - s * x;
    }
}

/// Reduce `m` to upper Hessenberg form `H = Q* m Q`. Returns `(H, Q)`.
pub fn hessenberg(m: &CMatrix) -> (CMatrix, CMatrix) {
    let n = m.nrows();
    let mut h = m.clone();
    let mut q = CMatrix::identity(n, n);
    if n < 3 {
        return (h, q);
    }
    let mut v = vec![ZERO; n];
    for k in 0..n - 2 {
        let len = n - k - 1;
        let xnorm = (k + 1..n).map(|i| h[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let phase = if x0 == ZERO { Complex64::new(1.0, 0.0) } else { x0 / x0.norm() };
        let alpha = -phase * xnorm;
        for (idx, i) in (k + 1..n).enumerate() {
            v[idx] = h[(i, k)];
        }
        v[0] -= alpha;
        let vnorm2: f64 = v[..len].iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H <- (I - beta v v*) H
        for j in k..n {
            let mut dot = ZERO;
            for idx in 0..len {
                dot += v[idx].conj() * h[(k + 1 + idx, j)];
            }
            dot *= beta;
            for idx in 0..len {
                h[(k + 1 + idx, j)] -= v[idx] * dot;
            }
        }
        // H <- H (I - beta v v*), Q <- Q (I - beta v v*)
        for target in [&mut h, &mut q] {
            for i in 0..n {
                let mut dot = ZERO;
                for idx in 0..len {
                    dot += target[(i, k + 1 + idx)] * v[idx];
                }
                dot *= beta;
                for idx in 0..len {
                    target[(i, k + 1 + idx)] -= dot * v[idx].conj();
                }
            }
        }
        h[(k + 1, k)] = alpha;
        for i in k + 2..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Eigenvalue of the trailing 2x2 block closest to its (2,2) entry.
fn wilkinson_shift(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Complex64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Run shifted QR on a Hessenberg matrix in place. When `q` is given the full
/// triangular factor is formed and the rotations are accumulated into `q`;
/// otherwise only the active window is updated (eigenvalues only).
fn hessenberg_qr(h: &mut CMatrix, mut q: Option<&mut CMatrix>) -> Result<()> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    let want_t = q.is_some();
    let hnorm = frobenius(h).max(f64::MIN_POSITIVE);
    let max_its = 30 * n.max(10);
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    let mut rots: Vec<(f64, Complex64)> = Vec::with_capacity(n);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let mut scale = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if scale == 0.0 {
                scale = hnorm;
            }
            if sub <= EPS * scale || sub < f64::MIN_POSITIVE * 1e4 {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if its > max_its {
            return Err(Error::NoConvergence { index: hi, iterations: total });
        }
        let shift = if its.is_multiple_of(10) {
            // exceptional shift
            h[(hi, hi)] + Complex64::new(0.75 * h[(hi, hi - 1)].norm(), 0.0)
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };
        for k in l..=hi {
            h[(k, k)] -= shift;
        }
        let col_end = if want_t { n } else { hi + 1 };
        rots.clear();
        for k in l..hi {
            let (c, s, _) = givens(h[(k, k)], h[(k + 1, k)]);
            rotate_rows(h, k, c, s, k..col_end);
            h[(k + 1, k)] = ZERO;
            rots.push((c, s));
        }
        let row_start = if want_t { 0 } else { l };
        for (idx, &(c, s)) in rots.iter().enumerate() {
            let k = l + idx;
            rotate_cols(h, k, c, s, row_start..(k + 2).min(hi + 1));
            if let Some(qm) = q.as_deref_mut() {
                rotate_cols(qm, k, c, s, 0..n);
            }
        }
        for k in l..=hi {
            h[(k, k)] += shift;
        }
    }
    if want_t {
        for j in 0..n {
            for i in j + 1..n {
                h[(i, j)] = ZERO;
            }
        }
    }
    Ok(())
}

/// Complex Schur factorization of a square matrix.
pub fn schur(m: &CMatrix) -> Result<SchurForm> {
    check_square(m, "Schur input")?;
    check_finite(m)?;
    let (mut h, mut q) = hessenberg(m);
    hessenberg_qr(&mut h, Some(&mut q))?;
    Ok(SchurForm { q, t: h, warnings: Vec::new() })
}

/// Eigenvalues only; skips accumulation of the Schur vectors.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Complex64>> {
    check_square(m, "eigenvalue input")?;
    check_finite(m)?;
    let (mut h, _) = hessenberg(m);
    hessenberg_qr(&mut h, None)?;
    Ok((0..h.nrows()).map(|i| h[(i, i)]).collect())
}

/// Swap diagonal entries `k` and `k+1` of the Schur factor. Returns the size of
/// the discarded subdiagonal entry relative to `||T||_F`.
fn swap_adjacent(sf: &mut SchurForm, k: usize, tnorm: f64) -> f64 {
    let n = sf.dim();
    let t11 = sf.t[(k, k)];
    let t22 = sf.t[(k + 1, k + 1)];
    let t12 = sf.t[(k, k + 1)];
    let (c, s, _) = givens(t12, t22 - t11);
    if k + 2 < n {
        rotate_rows(&mut sf.t, k, c, s, k + 2..n);
    }
    rotate_cols(&mut sf.t, k, c, s, 0..k);
    rotate_cols(&mut sf.q, k, c, s, 0..n);

    // Transform the 2x2 block explicitly to measure what the swap discards.
    let mut b = CMatrix::zeros(2, 2);
    b[(0, 0)] = t11;
    b[(0, 1)] = t12;
    b[(1, 1)] = t22;
    rotate_rows(&mut b, 0, c, s, 0..2);
    rotate_cols(&mut b, 0, c, s, 0..2);
    sf.t[(k, k)] = t22;
    sf.t[(k + 1, k + 1)] = t11;
    sf.t[(k, k + 1)] = b[(0, 1)];
    sf.t[(k + 1, k)] = ZERO;
    b[(1, 0)].norm() / tnorm.max(f64::MIN_POSITIVE)
}

/// Reorder the Schur form so that every eigenvalue for which `select` holds
/// occupies the leading diagonal block, keeping the relative order within the
/// selected and unselected groups.
pub fn reorder_schur<F>(sf: &SchurForm, select: F) -> SchurForm
where
    F: Fn(Complex64) -> bool,
{
    let flags: Vec<bool> = (0..sf.dim()).map(|i| select(sf.t[(i, i)])).collect();
    reorder_by_flags(sf, &flags)
}

/// Same as [`reorder_schur`] with the selection given per diagonal position.
pub(crate) fn reorder_by_flags(sf: &SchurForm, flags: &[bool]) -> SchurForm {
    let mut out = sf.clone();
    let n = out.dim();
    let tnorm = frobenius(&out.t);
    let mut flags = flags.to_vec();
    let mut dest = 0;
    for k in 0..n {
        if !flags[k] {
            continue;
        }
        let mut pos = k;
        while pos > dest {
            let lost = swap_adjacent(&mut out, pos - 1, tnorm);
            if lost > 1e-12 {
                out.warnings.push(format!(
                    "swap of positions {} and {} perturbed T by {:.2e} (relative); eigenvalues {} and {} are nearly equal",
                    pos - 1,
                    pos,
                    lost,
                    out.t[(pos - 1, pos - 1)],
                    out.t[(pos, pos)]
                ));
            }
            flags.swap(pos - 1, pos);
            pos -= 1;
        }
        dest += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::random_matrix;
    use crate::linalg::{c64, from_real_rows, multiset_distance, unitarity_defect};

    fn check(m: &CMatrix, sf: &SchurForm, tol: f64) {
        let n = m.nrows();
        assert!(unitarity_defect(&sf.q) <= 1e-12 * n as f64, "unitary");
        let rel = frobenius(&(sf.reconstruct() - m)) / frobenius(m).max(1e-300);
        assert!(rel < tol, "reconstruction {rel}");
        for j in 0..n {
            for i in j + 1..n {
                assert_eq!(sf.t[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn diagonal_input() {
        let m = from_real_rows(2, 2, &[3.0, 0.0, 0.0, -1.0]);
        let sf = schur(&m).unwrap();
        check(&m, &sf, 1e-14);
        let ev = sf.eigenvalues();
        assert!(multiset_distance(&ev, &[c64(3.0, 0.0), c64(-1.0, 0.0)]) < 1e-14);
    }

    #[test]
    fn nilpotent_fixed_point() {
        let m = from_real_rows(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let sf = schur(&m).unwrap();
        check(&m, &sf, 1e-15);
        assert!(sf.t[(0, 0)].norm() < 1e-15 && sf.t[(1, 1)].norm() < 1e-15);
        assert!((sf.t[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_eight_by_eight() {
        let m = random_matrix(8, 8, 7);
        let sf = schur(&m).unwrap();
        check(&m, &sf, 1e-12);
        // eigenvalues-only path agrees
        let ev = eigenvalues(&m).unwrap();
        assert!(multiset_distance(&ev, &sf.eigenvalues()) < 1e-10);
    }

    #[test]
    fn reconstruction_over_many_sizes() {
        for seed in 0..100u64 {
            let n = 2 + (seed as usize % 19);
            let m = random_matrix(n, n, 1000 + seed);
            let sf = schur(&m).unwrap();
            check(&m, &sf, 1e-12);
            let re = reorder_schur(&sf, |z| z.re > 0.0);
            check(&m, &re, 1e-12);
            assert!(multiset_distance(&re.eigenvalues(), &sf.eigenvalues()) < 1e-10);
            let npos = re.eigenvalues().iter().filter(|z| z.re > 0.0).count();
            assert!(re.eigenvalues()[..npos].iter().all(|z| z.re > 0.0));
        }
    }

    #[test]
    fn swap_two_by_two() {
        let t = from_real_rows(2, 2, &[0.0, 1.0, 0.0, 5.0]);
        let sf = SchurForm { q: CMatrix::identity(2, 2), t: t.clone(), warnings: vec![] };
        let re = reorder_schur(&sf, |z| z.norm() > 1e-12);
        assert!((re.t[(0, 0)] - c64(5.0, 0.0)).norm() < 1e-14);
        assert!(re.t[(1, 1)].norm() < 1e-14);
        assert!(frobenius(&(re.reconstruct() - t)) < 1e-14);
    }

    #[test]
    fn three_by_three_with_zeros() {
        let t = from_real_rows(3, 3, &[0.0, 2.0, 1.0, 0.0, -1.0, 3.0, 0.0, 0.0, 0.0]);
        let sf = SchurForm { q: CMatrix::identity(3, 3), t: t.clone(), warnings: vec![] };
        let re = reorder_schur(&sf, |z| z.norm() > 1e-12);
        let d = re.eigenvalues();
        assert!((d[0] - c64(-1.0, 0.0)).norm() < 1e-14);
        assert!(d[1].norm() < 1e-14 && d[2].norm() < 1e-14);
        assert!(frobenius(&(re.reconstruct() - t)) < 1e-12);
    }

    #[test]
    fn select_all_is_identity() {
        let m = random_matrix(6, 6, 3);
        let sf = schur(&m).unwrap();
        let re = reorder_schur(&sf, |_| true);
        assert_eq!(re.t, sf.t);
        assert_eq!(re.q, sf.q);
    }

    #[test]
    fn jordan_block_converges() {
        // 4x4 Jordan block at 2 hidden by a similarity
        let mut j = CMatrix::zeros(4, 4);
        for i in 0..4 {
            j[(i, i)] = c64(2.0, 0.0);
            if i + 1 < 4 {
                j[(i, i + 1)] = c64(1.0, 0.0);
            }
        }
        let p = random_matrix(4, 4, 11) + CMatrix::identity(4, 4) * c64(3.0, 0.0);
        let pinv = p.clone().try_inverse().unwrap();
        let m = &p * j * pinv;
        let sf = schur(&m).unwrap();
        check(&m, &sf, 1e-12);
        for z in sf.eigenvalues() {
            assert!((z - c64(2.0, 0.0)).norm() < 1e-3);
        }
    }
}
