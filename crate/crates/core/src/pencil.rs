//! Finite/infinite spectral split of a regular pencil `(A, E)`.
//!
//! With a shift `mu` for which `A - mu E` is invertible, the shifted operator
//! `E_mu = (A - mu E)^{-1} E` has an ordered Schur form
//!
//! ```text
//! E_mu = [Q Qt] [[G, D], [0, N]] [Q Qt]*
//! ```
//!
//! with `G` invertible and `N` nilpotent. The DAE `E x' = A x` evolves on
//! `Ran(Q)` under the generator `M = G^{-1} + mu I`, and
//! `x(t) = Q e^{tM} Q* x(0)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, c64, check_finite, check_square, condition_estimate, expm, frobenius,
    invert_upper_triangular, shift_diagonal, singular_values, unitarity_defect, CMatrix, CVector,
    LuFactor, SchurForm, Tolerances, EPS,
};

/// Relative residual accepted for a consistent initial condition.
pub const CONSISTENCY_TOL: f64 = 1e-8;

/// Default shift candidates tried in order by [`select_shift`].
pub fn default_shift_candidates() -> Vec<Complex64> {
    vec![
        c64(0.0, 0.0),
        c64(0.25, 0.0),
        c64(1.0, 0.0),
        c64(-1.0, 0.0),
        c64(0.0, 1.0),
        c64(0.0, -1.0),
        c64(1.0, 1.0),
    ]
}

/// The pair `(A, E)` of the DAE `E x' = A x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil {
    a: CMatrix,
    e: CMatrix,
}

impl Pencil {
    pub fn new(a: CMatrix, e: CMatrix) -> Result<Self> {
        check_square(&a, "A")?;
        check_square(&e, "E")?;
        if a.nrows() != e.nrows() {
            return Err(Error::Dimension(format!(
                "A is {0}x{0} but E is {1}x{1}",
                a.nrows(),
                e.nrows()
            )));
        }
        check_finite(&a)?;
        check_finite(&e)?;
        Ok(Pencil { a, e })
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn e(&self) -> &CMatrix {
        &self.e
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// `(T A, T E)`: same DAE solutions for any invertible `T`.
    pub fn premultiply(&self, t: &CMatrix) -> Result<Pencil> {
        if t.nrows() != self.dim() || t.ncols() != self.dim() {
            return Err(Error::Dimension(format!(
                "transform is {}x{}, pencil has dimension {}",
                t.nrows(),
                t.ncols(),
                self.dim()
            )));
        }
        Pencil::new(t * &self.a, t * &self.e)
    }

    /// `A - mu E`.
    pub fn shifted(&self, mu: Complex64) -> CMatrix {
        &self.a - &self.e * mu
    }
}

/// Threshold on `1/cond(A - mu E)` below which a shift is refused.
const SINGULAR_SHIFT_RCOND: f64 = 100.0 * EPS;

/// `E_mu = (A - mu E)^{-1} E`.
pub fn shifted_operator(p: &Pencil, mu: Complex64) -> Result<CMatrix> {
    let shifted = p.shifted(mu);
    let condition = condition_estimate(&shifted);
    if !condition.is_finite() || 1.0 / condition < SINGULAR_SHIFT_RCOND {
        return Err(Error::SingularShift { mu, condition });
    }
    let lu = LuFactor::new(&shifted).map_err(|_| Error::SingularShift { mu, condition })?;
    let e_mu = lu.solve(p.e())?;
    let resid = frobenius(&(&shifted * &e_mu - p.e()));
    // backward-stable solve: residual relative to ||A - mu E|| ||E_mu||
    let scale = frobenius(&shifted) * frobenius(&e_mu) + frobenius(p.e());
    if resid > 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularShift { mu, condition });
    }
    Ok(e_mu)
}

/// First candidate shift whose `A - mu E` has condition below `1/sqrt(eps)`.
pub fn select_shift(p: &Pencil, candidates: Option<&[Complex64]>) -> Result<Complex64> {
    let defaults = default_shift_candidates();
    let list = candidates.unwrap_or(&defaults);
    if list.is_empty() {
        return Err(Error::InvalidArgument("empty shift candidate list".into()));
    }
    let limit = 1.0 / EPS.sqrt();
    let mut report = Vec::with_capacity(list.len());
    for &mu in list {
        let cond = condition_estimate(&p.shifted(mu));
        if cond < limit {
            return Ok(mu);
        }
        report.push(format!("mu={mu}: {cond:.3e}"));
    }
    Err(Error::SingularPencil(report.join(", ")))
}

/// Ordered Schur split of `E_mu`.
#[derive(Debug, Clone, Serialize)]
pub struct FiniteDecomposition {
    pub mu: Complex64,
    /// Number of zero eigenvalues of `E_mu` (infinite pencil eigenvalues).
    pub d: usize,
    /// Nilpotency degree of `N` (0 when `d = 0`).
    pub index: usize,
    #[serde(skip)]
    pub q: CMatrix,
    #[serde(skip)]
    pub qtilde: CMatrix,
    #[serde(skip)]
    pub g: CMatrix,
    #[serde(skip)]
    pub coupling: CMatrix,
    #[serde(skip)]
    pub nilpotent: CMatrix,
    /// `G^{-1} + mu I`, upper triangular.
    #[serde(skip)]
    pub generator: CMatrix,
    /// Zero-classification threshold applied to `E_mu`.
    pub threshold: f64,
    /// `||[Q Qt] T [Q Qt]* - E_mu||_F / ||E_mu||_F`.
    pub reconstruction_residual: f64,
    pub warnings: Vec<String>,
}

impl FiniteDecomposition {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `n - d`.
    pub fn finite_dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn generator(&self) -> &CMatrix {
        &self.generator
    }

    pub fn finite_eigenvalues(&self) -> Vec<Complex64> {
        finite_eigenvalues(self)
    }

    /// Spectral abscissa `max Re(lambda)` over finite eigenvalues.
    pub fn spectral_abscissa(&self) -> f64 {
        self.finite_eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Q e^{tM} Q* x0` without the consistency check.
    fn propagate(&self, x0: &CVector, t: f64) -> Result<CVector> {
        let et = expm(&(&self.generator * c64(t, 0.0)))?;
        Ok(&self.q * (et * (self.q.adjoint() * x0)))
    }
}

/// Zero threshold `max(n eps, 1e-10) * max(1, ||M||_F)`.
fn zero_threshold(n: usize, m: &CMatrix) -> f64 {
    (n as f64 * EPS).max(1e-10) * frobenius(m).max(1.0)
}

/// Dimension of the null space of `E_mu^k` for increasing `k`, until it stops
/// growing. Returns `(d, index)`.
fn nullity_chain(e_mu: &CMatrix) -> (usize, usize) {
    let n = e_mu.nrows();
    let mut power = e_mu.clone();
    let mut prev = 0usize;
    for k in 1..=n {
        let thr = zero_threshold(n, &power);
        let nullity = singular_values(&power).iter().filter(|&&s| s <= thr).count();
        if nullity == prev {
            return (prev, if prev == 0 { 0 } else { k - 1 });
        }
        if nullity == n {
            return (n, k);
        }
        prev = nullity;
        power = &power * e_mu;
    }
    (prev, n)
}

/// Smallest `k` with `||N^k||_F <= 1e-10 max(1, ||N||_F^k)`.
fn nilpotency_degree(nil: &CMatrix) -> Option<usize> {
    let d = nil.nrows();
    if d == 0 {
        return Some(0);
    }
    let nn = frobenius(nil);
    let mut power = nil.clone();
    for k in 1..=d {
        if frobenius(&power) <= 1e-10 * nn.powi(k as i32).max(1.0) {
            return Some(k);
        }
        power = &power * nil;
    }
    None
}

/// Compute the split at shift `mu`. With `d_hint`, exactly `d_hint` eigenvalues
/// of smallest magnitude are assigned to the nilpotent block.
pub fn decompose(p: &Pencil, mu: Complex64, d_hint: Option<usize>) -> Result<FiniteDecomposition> {
    decompose_with(p, mu, d_hint, &Tolerances::default())
}

pub fn decompose_with(
    p: &Pencil,
    mu: Complex64,
    d_hint: Option<usize>,
    tol: &Tolerances,
) -> Result<FiniteDecomposition> {
    let n = p.dim();
    let e_mu = shifted_operator(p, mu)?;
    let threshold = zero_threshold(n, &e_mu);
    let (d_detected, chain_index) = nullity_chain(&e_mu);
    let mut warnings = Vec::new();

    let d = match d_hint {
        Some(h) if h >= n => {
            return Err(Error::BadZeroCount(format!(
                "d = {h} leaves no finite eigenvalues (dimension {n})"
            )))
        }
        Some(h) if h < d_detected => {
            return Err(Error::BadZeroCount(format!(
                "d = {h} is below the {d_detected} numerically zero eigenvalues of E_mu; \
                 G would be singular"
            )))
        }
        Some(h) => {
            if h > d_detected {
                warnings.push(format!(
                    "d = {h} exceeds the {d_detected} detected zero eigenvalues; \
                     pseudospectra are interior approximations"
                ));
            }
            h
        }
        None => d_detected,
    };
    if d >= n {
        return Err(Error::BadZeroCount(format!(
            "E_mu has no nonzero eigenvalues (dimension {n}); the pencil has no finite spectrum"
        )));
    }

    let sf = linalg::schur(&e_mu)?;
    // keep the n - d largest-magnitude eigenvalues in the leading block
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        sf.t[(j, j)]
            .norm()
            .partial_cmp(&sf.t[(i, i)].norm())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut flags = vec![false; n];
    for &i in &order[..n - d] {
        flags[i] = true;
    }
    let sf: SchurForm = linalg::reorder_by_flags(&sf, &flags);
    warnings.extend(sf.warnings.iter().cloned());

    let mut mags: Vec<f64> = (0..n).map(|i| sf.t[(i, i)].norm()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    if d > 0 && mags[d] < 10.0 * mags[d - 1] {
        warnings.push(format!(
            "zero classification is ambiguous: |lambda| = {:.3e} (nilpotent) vs {:.3e} (finite)",
            mags[d - 1],
            mags[d]
        ));
    }

    let m = n - d;
    let g = sf.t.view((0, 0), (m, m)).into_owned();
    let coupling = sf.t.view((0, m), (m, d)).into_owned();
    let nilpotent = sf.t.view((m, m), (d, d)).into_owned();
    let q = sf.q.columns(0, m).into_owned();
    let qtilde = sf.q.columns(m, d).into_owned();

    let gmin = (0..m).map(|i| g[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if gmin <= threshold {
        return Err(Error::BadZeroCount(format!(
            "finite block contains an eigenvalue of magnitude {gmin:.3e} below the threshold {threshold:.3e}"
        )));
    }

    let index = if d == 0 {
        0
    } else {
        match nilpotency_degree(&nilpotent) {
            Some(k) => {
                if d_hint.is_none() && k != chain_index {
                    warnings.push(format!(
                        "index from powers of N ({k}) differs from the null-space chain ({chain_index})"
                    ));
                }
                k
            }
            None => {
                warnings.push(format!(
                    "N is not numerically nilpotent; using the null-space chain index {chain_index}"
                ));
                chain_index.max(1)
            }
        }
    };
    if index > 0 {
        let relaxed = threshold.powf(1.0 / index as f64);
        let nmax = (0..d).map(|i| nilpotent[(i, i)].norm()).fold(0.0, f64::max);
        if nmax > relaxed && d_hint.is_none_or(|h| h == d_detected) {
            warnings.push(format!(
                "largest |diag(N)| = {nmax:.3e} exceeds the classification threshold {relaxed:.3e}"
            ));
        }
    }

    let recon = sf.reconstruct();
    let enorm = frobenius(&e_mu).max(f64::MIN_POSITIVE);
    let reconstruction_residual = frobenius(&(recon - &e_mu)) / enorm;
    if reconstruction_residual > tol.recon * 100.0 {
        warnings.push(format!("reconstruction residual {reconstruction_residual:.3e}"));
    }
    let udef = unitarity_defect(&sf.q);
    if udef > tol.unitary * n as f64 {
        warnings.push(format!("Schur vectors deviate from unitarity by {udef:.3e}"));
    }

    let mut generator = shift_diagonal(&invert_upper_triangular(&g)?, mu);
    for j in 0..m {
        for i in j + 1..m {
            generator[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }

    Ok(FiniteDecomposition {
        mu,
        d,
        index,
        q,
        qtilde,
        g,
        coupling,
        nilpotent,
        generator,
        threshold,
        reconstruction_residual,
        warnings,
    })
}

/// Select a shift with [`select_shift`] and decompose there.
pub fn decompose_auto(p: &Pencil, d_hint: Option<usize>) -> Result<FiniteDecomposition> {
    let mu = select_shift(p, None)?;
    decompose(p, mu, d_hint)
}

/// `{1/g_ii + mu}`: the finite spectrum of the pencil, read off the
/// generator's diagonal with rounding-level defective clusters averaged.
pub fn finite_eigenvalues(fd: &FiniteDecomposition) -> Vec<Complex64> {
    linalg::cluster_diagonal(&fd.generator)
}

/// Discrepancies between the analyses at two shifts.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShiftComparison {
    /// Max relative difference of `1/sigma_min(zI - M)` over the probes.
    pub field: f64,
    /// Multiset distance between the finite spectra.
    pub eigenvalues: f64,
}

impl ShiftComparison {
    pub fn max(&self) -> f64 {
        self.field.max(self.eigenvalues)
    }
}

/// Compare resolvent norms of the generators at shifts `mu` and `nu`.
pub fn check_mu_independence(
    p: &Pencil,
    mu: Complex64,
    nu: Complex64,
    probes: &[Complex64],
) -> Result<ShiftComparison> {
    let a = decompose(p, mu, None)?;
    let b = if mu == nu { a.clone() } else { decompose(p, nu, None)? };
    let mut field: f64 = 0.0;
    for &z in probes {
        let sa = crate::pseudospectra::generator_sigmin(&a.generator, z);
        let sb = crate::pseudospectra::generator_sigmin(&b.generator, z);
        let rel = if sa == sb { 0.0 } else { (sa - sb).abs() / sa.max(sb) };
        field = field.max(rel);
    }
    let eigenvalues = linalg::multiset_distance(&a.finite_eigenvalues(), &b.finite_eigenvalues());
    Ok(ShiftComparison { field, eigenvalues })
}

/// `||(I - Q Q*) x0||`.
pub fn consistency_residual(fd: &FiniteDecomposition, x0: &CVector) -> f64 {
    let proj = &fd.q * (fd.q.adjoint() * x0);
    linalg::vec_norm(&(x0 - proj))
}

fn check_vector(fd: &FiniteDecomposition, x0: &CVector) -> Result<()> {
    if x0.len() != fd.dim() {
        return Err(Error::Dimension(format!(
            "initial state has length {}, pencil has dimension {}",
            x0.len(),
            fd.dim()
        )));
    }
    for (i, z) in x0.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
    }
    Ok(())
}

/// Refuse inconsistent initial states, reporting the projected suggestion.
pub fn require_consistent(fd: &FiniteDecomposition, x0: &CVector) -> Result<()> {
    check_vector(fd, x0)?;
    let residual = consistency_residual(fd, x0);
    if residual > CONSISTENCY_TOL * linalg::vec_norm(x0).max(f64::MIN_POSITIVE) {
        let projected = (&fd.q * (fd.q.adjoint() * x0)).iter().copied().collect();
        return Err(Error::Inconsistent { residual, projected });
    }
    Ok(())
}

/// `x(t) = Q e^{t(G^{-1} + mu I)} Q* x0`.
pub fn solution_at(fd: &FiniteDecomposition, x0: &CVector, t: f64) -> Result<CVector> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time must be finite and nonnegative, got {t}")));
    }
    require_consistent(fd, x0)?;
    fd.propagate(x0, t)
}

/// States and norms of the solution on a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct TrajectorySample {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<CVector>,
    pub norms: Vec<f64>,
}

pub fn trajectory(fd: &FiniteDecomposition, x0: &CVector, times: &[f64]) -> Result<TrajectorySample> {
    require_consistent(fd, x0)?;
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(Error::InvalidArgument("times must be nonnegative and ascending".into()));
    }
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        states.push(fd.propagate(x0, t)?);
    }
    let norms = states.iter().map(linalg::vec_norm).collect();
    Ok(TrajectorySample { times: times.to_vec(), states, norms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{
        jordan_example, jordan_example_x0, oscillatory_example, planted_pencil,
        random_planted_pencil,
    };
    use crate::linalg::{from_real_rows, multiset_distance, re, vec_norm};
    use proptest::prelude::*;

    fn cv(v: &[Complex64]) -> CVector {
        CVector::from_vec(v.to_vec())
    }

    #[test]
    fn identity_e_gives_inverse_of_a() {
        let a = from_real_rows(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let p = Pencil::new(a.clone(), CMatrix::identity(2, 2)).unwrap();
        let e0 = shifted_operator(&p, re(0.0)).unwrap();
        let inv = a.try_inverse().unwrap();
        assert!(frobenius(&(e0 - inv)) < 1e-15);
    }

    #[test]
    fn jordan_example_shifted_operator_spectrum() {
        let e0 = shifted_operator(&jordan_example(), re(0.0)).unwrap();
        let ev = linalg::eigenvalues(&e0).unwrap();
        // defective -1 pair: perturbation of order sqrt(eps)
        let want = [re(-1.0), re(-1.0), re(0.0)];
        assert!(multiset_distance(&ev, &want) < 1e-6);
    }

    #[test]
    fn shift_at_eigenvalue_is_refused() {
        let err = shifted_operator(&jordan_example(), re(-1.0)).unwrap_err();
        assert!(matches!(err, Error::SingularShift { .. }));
    }

    #[test]
    fn invertible_e_has_no_zero_block() {
        let p = crate::fixtures::random_invertible_e(5, 3);
        let fd = decompose(&p, re(0.0), None).unwrap();
        assert_eq!(fd.d, 0);
        assert_eq!(fd.index, 0);
        assert_eq!(fd.nilpotent.nrows(), 0);
    }

    #[test]
    fn jordan_example_split() {
        let fd = decompose(&jordan_example(), re(0.0), None).unwrap();
        assert_eq!(fd.d, 1);
        assert_eq!(fd.index, 1);
        for i in 0..2 {
            // a defective pair is resolved only to about sqrt(eps)
            assert!((fd.g[(i, i)] - re(-1.0)).norm() < 1e-7);
        }
        let ev = fd.finite_eigenvalues();
        assert!(multiset_distance(&ev, &[re(-1.0), re(-1.0)]) < 1e-7);
    }

    #[test]
    fn oscillatory_example_spectrum() {
        let fd = decompose(&oscillatory_example(), re(0.0), None).unwrap();
        let ev = fd.finite_eigenvalues();
        assert!(multiset_distance(&ev, &[c64(-1.0, 5.0), c64(-1.0, -5.0)]) < 1e-10);
    }

    #[test]
    fn identity_e_reproduces_eigenvalues_of_a() {
        let finite = [re(-2.0), c64(0.5, 1.0), c64(-0.3, -0.7)];
        let planted = planted_pencil(&finite, &[], 8);
        // E is invertible; compare with eigenvalues of E^{-1} A
        let p = &planted.pencil;
        let m = p.e().clone().try_inverse().unwrap() * p.a();
        let fd = decompose(p, re(0.0), None).unwrap();
        let ev = linalg::eigenvalues(&m).unwrap();
        assert!(multiset_distance(&fd.finite_eigenvalues(), &ev) < 1e-10);
    }

    #[test]
    fn shift_selection() {
        let a = from_real_rows(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let p = Pencil::new(a, CMatrix::identity(2, 2)).unwrap();
        assert_eq!(select_shift(&p, None).unwrap(), re(0.0));
        // A singular, A - 0.25 E fine
        let a = from_real_rows(2, 2, &[0.0, 0.0, 0.0, 2.0]);
        let p = Pencil::new(a, CMatrix::identity(2, 2)).unwrap();
        assert_eq!(select_shift(&p, None).unwrap(), re(0.25));
        // singular pencil
        let a = from_real_rows(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p = Pencil::new(a.clone(), a).unwrap();
        assert!(matches!(select_shift(&p, None), Err(Error::SingularPencil(_))));
    }

    #[test]
    fn mu_independence_examples() {
        let p = jordan_example();
        let probes: Vec<Complex64> = (0..5)
            .flat_map(|i| (0..5).map(move |j| c64(-1.6 + 0.3 * i as f64 + 0.01, -0.6 + 0.3 * j as f64)))
            .collect();
        let same = check_mu_independence(&p, re(0.0), re(0.0), &probes).unwrap();
        assert_eq!(same.max(), 0.0);
        let cmp = check_mu_independence(&p, re(0.0), re(1.0), &probes).unwrap();
        assert!(cmp.field < 1e-8, "{cmp:?}");
        let cmp = check_mu_independence(&oscillatory_example(), re(0.0), re(0.25), &[]).unwrap();
        assert!(cmp.eigenvalues < 1e-10);
    }

    #[test]
    fn consistency_examples() {
        let fd = decompose(&jordan_example(), re(0.0), None).unwrap();
        let x0 = cv(&jordan_example_x0());
        assert!(consistency_residual(&fd, &x0) < 1e-10);
        let bad = cv(&[re(1.0), re(0.0), re(0.0)]);
        assert!(consistency_residual(&fd, &bad) > 0.1);
        let y = cv(&[c64(0.3, -1.0), re(2.0)]);
        let inrange = &fd.q * y;
        assert!(consistency_residual(&fd, &inrange) < 1e-12);
        match solution_at(&fd, &bad, 1.0) {
            Err(Error::Inconsistent { projected, .. }) => {
                let s: Complex64 = projected.iter().sum();
                assert!(s.norm() < 1e-12, "projection satisfies the constraint");
            }
            other => panic!("expected inconsistency, got {other:?}"),
        }
    }

    #[test]
    fn jordan_example_transient_growth() {
        let fd = decompose(&jordan_example(), re(0.0), None).unwrap();
        let x0 = cv(&jordan_example_x0());
        let x = solution_at(&fd, &x0, 0.0).unwrap();
        assert!(vec_norm(&(&x - &x0)) < 1e-12);
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.1).collect();
        let tr = trajectory(&fd, &x0, &times).unwrap();
        let x0n = vec_norm(&x0);
        let peak = tr.norms.iter().copied().fold(0.0, f64::max);
        assert!(peak / x0n > 1.0);
        assert!(*tr.norms.last().unwrap() / x0n < 1e-4);
        // the algebraic constraint holds along the trajectory
        for s in &tr.states {
            assert!((s[0] + s[1] + s[2]).norm() < 1e-10 * vec_norm(s).max(1.0));
        }
    }

    #[test]
    fn solution_satisfies_dae_by_central_differences() {
        let p = jordan_example();
        let fd = decompose(&p, re(0.0), None).unwrap();
        let x0 = cv(&jordan_example_x0());
        let h = 1e-5;
        for t in [0.5, 1.0, 3.0] {
            let xp = solution_at(&fd, &x0, t + h).unwrap();
            let xm = solution_at(&fd, &x0, t - h).unwrap();
            let x = solution_at(&fd, &x0, t).unwrap();
            let lhs = p.e() * (xp - xm) * c64(0.5 / h, 0.0);
            let resid = vec_norm(&(lhs - p.a() * &x));
            // O(h^2) truncation plus O(eps/h) rounding
            assert!(resid < 1e-7, "t {t}: {resid}");
        }
    }

    #[test]
    fn norm_equals_generator_exponential_norm() {
        let fd = decompose(&oscillatory_example(), re(0.0), None).unwrap();
        let x0 = &fd.q * cv(&[re(1.0), c64(0.0, 1.0)]);
        for t in [0.1, 0.7, 2.0] {
            let x = solution_at(&fd, &x0, t).unwrap();
            let y = expm(&(&fd.generator * c64(t, 0.0))).unwrap() * (fd.q.adjoint() * &x0);
            assert!((vec_norm(&x) - vec_norm(&y)).abs() < 1e-10 * vec_norm(&y));
        }
    }

    #[test]
    fn d_hint_rules() {
        let p = jordan_example();
        assert!(matches!(decompose(&p, re(0.0), Some(3)), Err(Error::BadZeroCount(_))));
        assert!(matches!(decompose(&p, re(0.0), Some(0)), Err(Error::BadZeroCount(_))));
        let fd = decompose(&p, re(0.0), Some(2)).unwrap();
        assert_eq!(fd.d, 2);
        assert!(!fd.warnings.is_empty());
    }

    #[test]
    fn index_two_and_three_blocks() {
        let finite = [re(-1.0), c64(-0.5, 2.0), c64(-0.5, -2.0)];
        let planted = planted_pencil(&finite, &[2, 2], 5);
        let fd = decompose(&planted.pencil, re(0.0), None).unwrap();
        assert_eq!((fd.d, fd.index), (4, 2));
        let planted = planted_pencil(&finite, &[3, 1], 6);
        let fd = decompose(&planted.pencil, re(0.0), None).unwrap();
        assert_eq!((fd.d, fd.index), (4, 3));
        assert!(multiset_distance(&fd.finite_eigenvalues(), &finite) < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn random_pencils_decompose(seed in 0u64..100_000, m in 1usize..=8, d in 0usize..=4) {
            let planted = random_planted_pencil(m, d, seed);
            let p = &planted.pencil;
            let mu = select_shift(p, None).unwrap();
            let fd = decompose(p, mu, None).unwrap();
            prop_assert_eq!(fd.d, planted.d());
            prop_assert_eq!(fd.index, planted.index());
            prop_assert!(fd.reconstruction_residual < 1e-10);
            prop_assert!(multiset_distance(&fd.finite_eigenvalues(), &planted.finite) < 1e-8);
            let nn = frobenius(&fd.nilpotent);
            if fd.d > 0 {
                let mut pow = fd.nilpotent.clone();
                for _ in 1..fd.d { pow = &pow * &fd.nilpotent; }
                prop_assert!(frobenius(&pow) < 1e-10 * nn.powi(fd.d as i32).max(1.0));
            }
            // a second admissible shift gives the same spectrum
            let nu = c64(0.37, -0.21);
            if let Ok(fd2) = decompose(p, nu, None) {
                prop_assert!(multiset_distance(&fd.finite_eigenvalues(), &fd2.finite_eigenvalues()) < 1e-8);
            }
        }
    }
}
