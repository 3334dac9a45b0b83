//! Coordinate-format sparse matrices and the saddle-point pencil generator.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{c64, singular_values, CMatrix, CVector};
use crate::pencil::Pencil;

/// Square or rectangular matrix in coordinate form. Entries are sorted by
/// `(row, col)`, unique, and nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseMatrix {
    /// Sum duplicates and drop explicit zeros.
    pub fn from_triplets(rows: usize, cols: usize, triplets: impl IntoIterator<Item = (usize, usize, Complex64)>) -> Result<Self> {
        let mut entries: Vec<(usize, usize, Complex64)> = Vec::new();
        for (i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::Dimension(format!("entry ({i}, {j}) outside a {rows}x{cols} matrix")));
            }
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            entries.push((i, j, v));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut merged: Vec<(usize, usize, Complex64)> = Vec::with_capacity(entries.len());
        for (i, j, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => merged.push((i, j, v)),
            }
        }
        merged.retain(|e| e.2 != c64(0.0, 0.0));
        Ok(SparseMatrix { rows, cols, entries: merged })
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != c64(0.0, 0.0) {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        SparseMatrix { rows: m.nrows(), cols: m.ncols(), entries }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] = v;
        }
        m
    }

    pub fn mul_vec(&self, x: &CVector) -> CVector {
        let mut y = CVector::zeros(self.rows);
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }
}

/// Block sizes of a saddle-point pencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SaddleBlocks {
    pub n_v: usize,
    pub n_p: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparsePencil {
    pub a: SparseMatrix,
    pub e: SparseMatrix,
    pub blocks: Option<SaddleBlocks>,
}

impl SparsePencil {
    pub fn new(a: SparseMatrix, e: SparseMatrix) -> Result<Self> {
        if a.rows != a.cols || e.rows != e.cols || a.rows != e.rows {
            return Err(Error::Dimension(format!(
                "pencil blocks are {}x{} and {}x{}",
                a.rows, a.cols, e.rows, e.cols
            )));
        }
        Ok(SparsePencil { a, e, blocks: None })
    }

    pub fn from_dense(p: &Pencil) -> Self {
        SparsePencil { a: SparseMatrix::from_dense(p.a()), e: SparseMatrix::from_dense(p.e()), blocks: None }
    }

    pub fn dim(&self) -> usize {
        self.a.rows
    }

    pub fn to_dense(&self) -> Result<Pencil> {
        Pencil::new(self.a.to_dense(), self.e.to_dense())
    }
}

/// Symmetric sparse pattern made diagonally dominant: `shift + row sums` on
/// the diagonal, so the result is positive definite.
fn dominant_symmetric(n: usize, density: f64, shift: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
    let mut t = Vec::new();
    let mut diag = vec![shift; n];
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                let v: f64 = rng.gen_range(-1.0..1.0);
                t.push((i, j, v));
                t.push((j, i, v));
                diag[i] += v.abs();
                diag[j] += v.abs();
            }
        }
    }
    for (i, d) in diag.into_iter().enumerate() {
        t.push((i, i, d));
    }
    t
}

const SADDLE_ATTEMPTS: u64 = 3;

/// Seeded saddle-point pencil
/// `A = [[K, B^T], [B, 0]]`, `E = [[M, 0], [0, 0]]` with `M` symmetric
/// positive definite, `K = -L + c (W - W^T)` (`L` positive definite, so every
/// finite eigenvalue is stable) and `B` of full row rank.
pub fn generate_saddle_pencil(n_v: usize, n_p: usize, seed: u64, density: f64) -> Result<SparsePencil> {
    if n_p == 0 || n_v <= 2 * n_p {
        return Err(Error::InvalidArgument(format!("need n_v > 2 n_p > 0, got n_v = {n_v}, n_p = {n_p}")));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidArgument(format!("density must lie in (0, 1], got {density}")));
    }
    for attempt in 0..SADDLE_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x5851_f42d_4c95_7f2d)));
        let m = dominant_symmetric(n_v, density, 1.0, &mut rng);
        let l = dominant_symmetric(n_v, density, 0.5, &mut rng);
        let mut k: Vec<(usize, usize, f64)> = l.into_iter().map(|(i, j, v)| (i, j, -v)).collect();
        for i in 0..n_v {
            for j in i + 1..n_v {
                if rng.gen_bool(density) {
                    let w: f64 = 2.0 * rng.gen_range(-1.0..1.0);
                    k.push((i, j, w));
                    k.push((j, i, -w));
                }
            }
        }
        let mut b: Vec<(usize, usize, f64)> = Vec::new();
        for i in 0..n_p {
            b.push((i, 2 * i, 1.0));
            b.push((i, 2 * i + 1, -1.0));
            for j in 0..n_v {
                if rng.gen_bool(density / 2.0) {
                    b.push((i, j, rng.gen_range(-0.5..0.5)));
                }
            }
        }
        let bs = SparseMatrix::from_triplets(n_p, n_v, b.iter().map(|&(i, j, v)| (i, j, c64(v, 0.0))))?;
        let sv = singular_values(&bs.to_dense());
        let smax = sv.iter().copied().fold(0.0, f64::max);
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        if !(smin > 1e-8 * smax) {
            continue;
        }
        let n = n_v + n_p;
        let a_trip = k
            .into_iter()
            .chain(b.iter().map(|&(i, j, v)| (j, n_v + i, v)))
            .chain(b.iter().map(|&(i, j, v)| (n_v + i, j, v)))
            .map(|(i, j, v)| (i, j, c64(v, 0.0)));
        let a = SparseMatrix::from_triplets(n, n, a_trip)?;
        let e = SparseMatrix::from_triplets(n, n, m.into_iter().map(|(i, j, v)| (i, j, c64(v, 0.0))))?;
        let mut p = SparsePencil::new(a, e)?;
        p.blocks = Some(SaddleBlocks { n_v, n_p });
        return Ok(p);
    }
    Err(Error::Generator(format!(
        "constraint block stayed rank deficient after {SADDLE_ATTEMPTS} attempts (seed {seed})"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;
    use crate::pencil::decompose;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = SparseMatrix::from_triplets(2, 2, [(0, 0, re(2.0)), (0, 0, re(3.0)), (1, 0, re(1.0)), (1, 0, re(-1.0))]).unwrap();
        assert_eq!(m.entries(), &[(0, 0, re(5.0))]);
        assert!(SparseMatrix::from_triplets(2, 2, [(2, 0, re(1.0))]).is_err());
    }

    #[test]
    fn dense_round_trip_and_matvec() {
        let d = crate::linalg::testutil::random_matrix(4, 3, 1);
        let s = SparseMatrix::from_dense(&d);
        assert_eq!(s.to_dense(), d);
        let x = CVector::from_fn(3, |i, _| c64(i as f64, 1.0));
        assert!((s.mul_vec(&x) - &d * &x).norm() < 1e-14);
    }

    #[test]
    fn smallest_saddle_has_index_two() {
        let p = generate_saddle_pencil(4, 1, 3, 0.5).unwrap().to_dense().unwrap();
        let fd = decompose(&p, re(0.0), None).unwrap();
        assert_eq!((fd.d, fd.index), (2, 2));
    }

    #[test]
    fn saddle_counts() {
        for seed in 0..3 {
            let sp = generate_saddle_pencil(40, 15, seed, 0.1).unwrap();
            assert_eq!(sp.blocks, Some(SaddleBlocks { n_v: 40, n_p: 15 }));
            let fd = decompose(&sp.to_dense().unwrap(), re(0.0), None).unwrap();
            assert_eq!((fd.d, fd.index, fd.finite_dim()), (30, 2, 25), "seed {seed}");
            assert!(fd.spectral_abscissa() < 0.0);
        }
    }

    #[test]
    fn generator_is_deterministic() {
        let a = generate_saddle_pencil(12, 3, 99, 0.3).unwrap();
        let b = generate_saddle_pencil(12, 3, 99, 0.3).unwrap();
        assert_eq!(a, b);
        let c = generate_saddle_pencil(12, 3, 100, 0.3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(generate_saddle_pencil(4, 2, 0, 0.5).is_err());
        assert!(generate_saddle_pencil(10, 0, 0, 0.5).is_err());
        assert!(generate_saddle_pencil(10, 2, 0, 0.0).is_err());
    }
}
