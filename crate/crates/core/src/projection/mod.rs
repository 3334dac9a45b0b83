//! Large-scale approximation: project the shift-invert operator
//! `E_mu = (A - mu E)^{-1} E` onto an (approximately) invariant subspace `V`
//! of its largest-magnitude eigenvalues. With `Ghat = V* E_mu V`, the
//! pseudospectra of `Ghat^{-1} + mu I` lie inside those of the pencil, so
//! they give guaranteed lower bounds on transient growth.

mod arnoldi;
mod sparse;

pub use arnoldi::{ArnoldiOptions, DenseShiftInvert, ShiftInvert, DENSE_SOLVER_LIMIT};
pub use sparse::{generate_saddle_pencil, SaddleBlocks, SparseMatrix, SparsePencil};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{
    c64, condition_estimate, invert_upper_triangular, is_upper_triangular, lu_solve, qr_economy, shift_diagonal,
    solve_upper_triangular_adjoint, unitarity_defect, vec_norm, CMatrix,
};
use crate::pseudospectra::{FieldKind, GridSpec, ResolventField, ResolventOperator};
use crate::transient::{pseudospectral_abscissa_with, Strategy};
use crate::weighted::InnerProductNorm;

/// Ritz values below this fraction of the largest are treated as zero.
pub const ZERO_RITZ_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionResult {
    pub mu: Complex64,
    /// `n x k` orthonormal basis.
    #[serde(skip)]
    pub v: CMatrix,
    /// `k x k` projected operator `V* E_mu V`.
    #[serde(skip)]
    pub ghat: CMatrix,
    pub ritz_values: Vec<Complex64>,
    /// `||E_mu v_i - V Ghat e_i||`, computed with the operator itself.
    pub residuals: Vec<f64>,
    /// Triangular factor of `R V = Z S` for an H-norm projection.
    #[serde(skip)]
    pub s: Option<CMatrix>,
    pub converged: bool,
    pub restarts: usize,
    /// `||V* V - I||_F`.
    pub orthogonality: f64,
    /// Condition estimate of a user-supplied basis before orthonormalization.
    pub basis_condition: Option<f64>,
}

impl ProjectionResult {
    pub fn dim(&self) -> usize {
        self.ghat.nrows()
    }

    /// Leading `k` columns of a Krylov–Schur basis; the projected operator of
    /// a nested subspace is the leading block of the triangular `Ghat`.
    pub fn truncate(&self, k: usize) -> Result<ProjectionResult> {
        if k == 0 || k > self.dim() || !is_upper_triangular(&self.ghat) {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate a {}-dimensional projection to {k}",
                self.dim()
            )));
        }
        Ok(ProjectionResult {
            mu: self.mu,
            v: self.v.columns(0, k).into_owned(),
            ghat: self.ghat.view((0, 0), (k, k)).into_owned(),
            ritz_values: self.ritz_values[..k].to_vec(),
            residuals: self.residuals[..k].to_vec(),
            s: None,
            converged: self.converged,
            restarts: self.restarts,
            orthogonality: unitarity_defect(&self.v.columns(0, k).into_owned()),
            basis_condition: self.basis_condition,
        })
    }

    /// `Ghat^{-1} + mu I`, or `S (Ghat^{-1} + mu I) S^{-1}` after
    /// [`projected_h_norm`]. Refuses (numerically) zero Ritz values.
    pub fn projected_generator(&self) -> Result<CMatrix> {
        let scale = self.ritz_values.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (i, z) in self.ritz_values.iter().enumerate() {
            if z.norm() <= ZERO_RITZ_TOL * scale || scale == 0.0 {
                return Err(Error::ZeroRitzValue { index: i });
            }
        }
        let ginv = if is_upper_triangular(&self.ghat) {
            invert_upper_triangular(&self.ghat)?
        } else {
            lu_solve(&self.ghat, &CMatrix::identity(self.dim(), self.dim()))?
        };
        let m = shift_diagonal(&ginv, self.mu);
        match &self.s {
            None => Ok(m),
            Some(s) => Ok(solve_upper_triangular_adjoint(s, &(s * m).adjoint())?.adjoint()),
        }
    }

    pub fn operator(&self) -> Result<ResolventOperator> {
        ResolventOperator::from_matrix(&self.projected_generator()?)
    }
}

fn residuals(op: &dyn ShiftInvert, v: &CMatrix, ghat: &CMatrix) -> Result<Vec<f64>> {
    let vg = v * ghat;
    (0..v.ncols())
        .map(|i| {
            let w = op.apply(&v.column(i).into_owned())?;
            Ok(vec_norm(&(w - vg.column(i))))
        })
        .collect()
}

/// Krylov–Schur basis for the `k` largest-magnitude eigenvalues of `E_mu`.
pub fn arnoldi_invariant_subspace(op: &dyn ShiftInvert, k: usize, opts: &ArnoldiOptions) -> Result<ProjectionResult> {
    let ks = arnoldi::krylov_schur(op, k, opts)?;
    let residuals = residuals(op, &ks.v, &ks.t)?;
    Ok(ProjectionResult {
        mu: op.mu(),
        orthogonality: unitarity_defect(&ks.v),
        ritz_values: ks.ritz,
        v: ks.v,
        ghat: ks.t,
        residuals,
        s: None,
        converged: ks.converged,
        restarts: ks.restarts,
        basis_condition: None,
    })
}

/// Dense shift-invert plus Krylov–Schur with default options.
pub fn project(p: &SparsePencil, mu: Complex64, k: usize) -> Result<ProjectionResult> {
    let op = DenseShiftInvert::new(p, mu)?;
    arnoldi_invariant_subspace(&op, k, &ArnoldiOptions::default())
}

/// Project onto the span of an arbitrary (possibly ill-conditioned) basis,
/// e.g. computed eigenvectors: orthonormalize, then form `V* E_mu V`.
pub fn project_onto_basis(op: &dyn ShiftInvert, w: &CMatrix) -> Result<ProjectionResult> {
    let basis_condition = condition_estimate(&(w.adjoint() * w)).sqrt();
    let v = qr_economy(w)?.z;
    let k = v.ncols();
    let mut ev = CMatrix::zeros(v.nrows(), k);
    for i in 0..k {
        ev.set_column(i, &op.apply(&v.column(i).into_owned())?);
    }
    let ghat = v.adjoint() * &ev;
    let ritz_values = crate::linalg::eigenvalues(&ghat)?;
    let residuals = (0..k).map(|i| vec_norm(&(ev.column(i) - &v * ghat.column(i)))).collect();
    Ok(ProjectionResult {
        mu: op.mu(),
        orthogonality: unitarity_defect(&v),
        v,
        ghat,
        ritz_values,
        residuals,
        s: None,
        converged: true,
        restarts: 0,
        basis_condition: Some(basis_condition),
    })
}

/// Field of the projected generator; every value bounds the pencil's
/// `sigma_min(zI - M)` from above when `V` is invariant.
pub fn interior_pseudospectra(pr: &ProjectionResult, grid: &GridSpec, exec: Execution) -> Result<ResolventField> {
    pr.operator()?.field(grid, FieldKind::Dae, Some(pr.mu), exec)
}

/// Attach the H-norm factor `S` from the economy QR of `R V`.
pub fn projected_h_norm(pr: &ProjectionResult, ipn: &InnerProductNorm) -> Result<ProjectionResult> {
    if ipn.dim() != pr.v.nrows() {
        return Err(Error::Dimension(format!(
            "inner product has dimension {}, basis has {} rows",
            ipn.dim(),
            pr.v.nrows()
        )));
    }
    let qr = qr_economy(&(ipn.r() * &pr.v))?;
    let mut out = pr.clone();
    out.s = Some(qr.s);
    Ok(out)
}

/// Guaranteed growth lower bound `alpha_eps(projected generator) / eps`.
pub fn projected_growth_bound(pr: &ProjectionResult, epsilon: f64) -> Result<f64> {
    let op = pr.operator()?;
    Ok(pseudospectral_abscissa_with(&op, epsilon, Strategy::Auto)?.value / epsilon)
}

/// Exact dense decomposition of a sparse pencil, for validation.
pub fn dense_reference(p: &SparsePencil, mu: Complex64) -> Result<crate::pencil::FiniteDecomposition> {
    crate::pencil::decompose(&p.to_dense()?, mu, None)
}

#[doc(hidden)]
pub fn scalar_resolvent(z: Complex64, ritz: Complex64, mu: Complex64) -> f64 {
    (z - (c64(1.0, 0.0) / ritz + mu)).norm()
}
