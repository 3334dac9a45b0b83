//! Krylov–Schur iteration for the largest-magnitude eigenvalues of the
//! shift-invert operator `E_mu = (A - mu E)^{-1} E`.

use num_complex::Complex64;

use super::sparse::{SparseMatrix, SparsePencil};
use crate::error::{Error, Result};
use crate::linalg::{self, c64, condition_estimate, vec_norm, CMatrix, CVector, LuFactor};

/// Applies `w = (A - mu E)^{-1} E v`.
pub trait ShiftInvert: Sync {
    fn dim(&self) -> usize;
    fn mu(&self) -> Complex64;
    fn apply(&self, v: &CVector) -> Result<CVector>;
}

/// Largest dimension factored densely.
pub const DENSE_SOLVER_LIMIT: usize = 2000;

/// Dense LU of `A - mu E` with a sparse `E` product.
pub struct DenseShiftInvert {
    lu: LuFactor,
    e: SparseMatrix,
    mu: Complex64,
}

impl DenseShiftInvert {
    pub fn new(p: &SparsePencil, mu: Complex64) -> Result<Self> {
        let n = p.dim();
        if n > DENSE_SOLVER_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "dimension {n} exceeds the dense shift-invert limit {DENSE_SOLVER_LIMIT}; \
                 provide a sparse ShiftInvert implementation"
            )));
        }
        let shifted = p.a.to_dense() - p.e.to_dense() * mu;
        let lu = LuFactor::new(&shifted).map_err(|_| Error::SingularShift { mu, condition: condition_estimate(&shifted) })?;
        let cond = condition_estimate(&shifted);
        if !(cond * 100.0 * linalg::EPS < 1.0) {
            return Err(Error::SingularShift { mu, condition: cond });
        }
        Ok(DenseShiftInvert { lu, e: p.e.clone(), mu })
    }
}

impl ShiftInvert for DenseShiftInvert {
    fn dim(&self) -> usize {
        self.lu.dim()
    }

    fn mu(&self) -> Complex64 {
        self.mu
    }

    fn apply(&self, v: &CVector) -> Result<CVector> {
        self.lu.solve_vec(&self.e.mul_vec(v))
    }
}

#[derive(Debug, Clone)]
pub struct ArnoldiOptions {
    /// Converged when every wanted Ritz residual is below `tol * |theta|`.
    pub tol: f64,
    pub max_restarts: usize,
    /// Applications of the operator to the start vector before iterating,
    /// removing components along the infinite-eigenvalue directions (at
    /// least the DAE index is needed).
    pub purify: usize,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        ArnoldiOptions { tol: 1e-8, max_restarts: 300, purify: 3, seed: 0 }
    }
}

/// Outcome of the iteration in Schur form: `Op V ~ V T` with `T` upper
/// triangular and its diagonal ordered by decreasing magnitude.
pub(crate) struct KrylovSchur {
    pub v: CMatrix,
    pub t: CMatrix,
    /// Diagonal of `t` with defective clusters of the full reached Schur
    /// form averaged; wanted values whose partners fall outside the kept
    /// block still benefit.
    pub ritz: Vec<Complex64>,
    pub converged: bool,
    pub restarts: usize,
}

fn start_vector(n: usize, seed: u64) -> CVector {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let base = 1.0 / (n as f64).sqrt();
    let v = CVector::from_fn(n, |_, _| c64(base + 0.1 * base * rng.gen_range(-1.0..1.0), 0.1 * base * rng.gen_range(-1.0..1.0)));
    let nv = vec_norm(&v);
    v / c64(nv, 0.0)
}

/// Modified Gram–Schmidt against the first `j` columns of `v`, twice.
/// Returns the coefficients and the remaining vector.
fn orthogonalize(v: &CMatrix, j: usize, mut w: CVector) -> (CVector, CVector) {
    let mut h = CVector::zeros(j);
    for _ in 0..2 {
        for i in 0..j {
            let c = v.column(i).dotc(&w);
            w -= v.column(i) * c;
            h[i] += c;
        }
    }
    (h, w)
}

/// Expand the decomposition `Op V[:, :j] = V[:, :j+1] H[:j+1, :j]` up to `m`
/// columns. Returns the number of columns reached (less than `m` on an
/// invariant subspace) and the residual norm.
fn expand(op: &dyn ShiftInvert, v: &mut CMatrix, h: &mut CMatrix, mut j: usize, m: usize) -> Result<(usize, f64)> {
    loop {
        let w = op.apply(&v.column(j).into_owned())?;
        let before = vec_norm(&w);
        let (coef, w) = orthogonalize(v, j + 1, w);
        for i in 0..=j {
            h[(i, j)] = coef[i];
        }
        let beta = vec_norm(&w);
        j += 1;
        if beta <= 1e-10 * before || before == 0.0 {
            return Ok((j, 0.0));
        }
        if j == m {
            // keep the residual direction for the restart
            if v.ncols() > m {
                v.set_column(m, &(w / c64(beta, 0.0)));
            }
            return Ok((j, beta));
        }
        h[(j, j - 1)] = c64(beta, 0.0);
        v.set_column(j, &(w / c64(beta, 0.0)));
    }
}

/// Krylov–Schur with thick restarts at `max(3k, k + 2)` vectors.
pub(crate) fn krylov_schur(op: &dyn ShiftInvert, k: usize, opts: &ArnoldiOptions) -> Result<KrylovSchur> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("subspace dimension must lie in 1..={n}, got {k}")));
    }
    let m = (3 * k).max(k + 2).min(n);
    let mut x = start_vector(n, opts.seed);
    for _ in 0..opts.purify {
        let y = op.apply(&x)?;
        let ny = vec_norm(&y);
        if ny == 0.0 {
            return Err(Error::InvalidArgument("start vector lies in the null space of E".into()));
        }
        x = y / c64(ny, 0.0);
    }
    // column m holds the residual direction between restarts
    let mut v = CMatrix::zeros(n, m + 1);
    v.set_column(0, &x);
    let mut h = CMatrix::zeros(m + 1, m);
    let mut j = 0;
    let mut restarts = 0;
    loop {
        let (reached, beta) = expand(op, &mut v, &mut h, j, m)?;
        if reached < k {
            return Err(Error::InvalidArgument(format!(
                "Krylov space became invariant at dimension {reached} < k = {k}; \
                 the finite spectrum has fewer than k eigenvalues"
            )));
        }
        // Schur form of the square part, wanted values first
        let hm = h.view((0, 0), (reached, reached)).into_owned();
        let sf = linalg::schur(&hm)?;
        let mut order: Vec<usize> = (0..reached).collect();
        let diag: Vec<Complex64> = (0..reached).map(|i| sf.t[(i, i)]).collect();
        order.sort_by(|&a, &b| diag[b].norm().total_cmp(&diag[a].norm()));
        let mut flags = vec![false; reached];
        for &i in &order[..k] {
            flags[i] = true;
        }
        let sf = linalg::reorder_by_flags(&sf, &flags);
        // residual couplings of the Schur vectors: beta * last row of U
        let b: Vec<Complex64> = (0..reached).map(|i| sf.q[(reached - 1, i)] * beta).collect();
        let converged = (0..k).all(|i| b[i].norm() <= opts.tol * sf.t[(i, i)].norm());
        let vr = v.columns(0, reached) * &sf.q;
        if converged || beta == 0.0 || restarts >= opts.max_restarts || reached == n {
            // order the kept block by decreasing magnitude so leading blocks nest
            let (t, u) = sorted_block(&sf.t.view((0, 0), (k, k)).into_owned());
            let vk = vr.columns(0, k) * u;
            let means = linalg::cluster_diagonal(&sf.t);
            let ritz = (0..k)
                .map(|i| {
                    let j = (0..k)
                        .min_by(|&a, &b| (sf.t[(a, a)] - t[(i, i)]).norm().total_cmp(&(sf.t[(b, b)] - t[(i, i)]).norm()))
                        .expect("k >= 1");
                    means[j]
                })
                .collect();
            return Ok(KrylovSchur { v: vk, t, ritz, converged: converged || beta == 0.0, restarts });
        }
        // thick restart: keep k Schur vectors, the residual direction follows
        restarts += 1;
        let resid = v.column(m).into_owned();
        v.fill(c64(0.0, 0.0));
        v.columns_mut(0, k).copy_from(&vr.columns(0, k));
        v.set_column(k, &resid);
        h.fill(c64(0.0, 0.0));
        h.view_mut((0, 0), (k, k)).copy_from(&sf.t.view((0, 0), (k, k)));
        for i in 0..k {
            h[(k, i)] = b[i];
        }
        j = k;
    }
}

/// Reorder an upper-triangular block so that its diagonal magnitudes
/// decrease; returns the new block and the unitary that achieves it.
fn sorted_block(t: &CMatrix) -> (CMatrix, CMatrix) {
    let k = t.nrows();
    let mut sf = crate::linalg::SchurForm { q: CMatrix::identity(k, k), t: t.clone(), warnings: vec![] };
    // selection sort by repeatedly moving the largest remaining value up
    for pos in 0..k {
        let best = (pos..k)
            .max_by(|&a, &b| sf.t[(a, a)].norm().total_cmp(&sf.t[(b, b)].norm()))
            .expect("nonempty range");
        if best != pos {
            let flags: Vec<bool> = (0..k).map(|i| i < pos || i == best).collect();
            sf = linalg::reorder_by_flags(&sf, &flags);
        }
    }
    (sf.t, sf.q)
}
