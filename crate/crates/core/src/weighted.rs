//! Pseudospectra in the norm `||x||_H = sqrt(x* H x)` induced by a Hermitian
//! positive definite `H = R* R` (`R` the upper-triangular Cholesky factor).
//!
//! Two equivalent routes:
//! * transform the pencil to `(A R^{-1}, E R^{-1})` and use 2-norm machinery;
//! * reuse the 2-norm decomposition: with `R Q = Z S` (economy QR) the
//!   H-norm pseudospectra are the 2-norm pseudospectra of `S M S^{-1}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{
    cholesky, frobenius, norm2, qr_economy, solve_upper_triangular_adjoint, vec_norm, CMatrix, CVector,
};
use crate::pencil::{decompose, FiniteDecomposition, Pencil};
use crate::pseudospectra::{FieldKind, GridSpec, ResolventField, ResolventOperator};

#[derive(Debug, Clone)]
pub struct InnerProductNorm {
    h: CMatrix,
    r: CMatrix,
}

impl InnerProductNorm {
    /// Factor `H`; refuses non-Hermitian or indefinite input.
    pub fn new(h: CMatrix) -> Result<Self> {
        let r = cholesky(&h)?;
        Ok(InnerProductNorm { h, r })
    }

    pub fn identity(n: usize) -> Self {
        InnerProductNorm { h: CMatrix::identity(n, n), r: CMatrix::identity(n, n) }
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }

    pub fn r(&self) -> &CMatrix {
        &self.r
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    /// `||R* R - H||_F / ||H||_F`.
    pub fn factor_residual(&self) -> f64 {
        frobenius(&(self.r.adjoint() * &self.r - &self.h)) / frobenius(&self.h).max(f64::MIN_POSITIVE)
    }

    fn check(&self, n: usize, what: &str) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Dimension(format!("{what} has dimension {n}, inner product has {}", self.dim())));
        }
        Ok(())
    }

    /// `X R^{-1}`.
    fn right_inverse(&self, x: &CMatrix) -> Result<CMatrix> {
        Ok(solve_upper_triangular_adjoint(&self.r, &x.adjoint())?.adjoint())
    }
}

/// `||x||_H = ||R x||_2`.
pub fn h_vector_norm(x: &CVector, ipn: &InnerProductNorm) -> Result<f64> {
    ipn.check(x.len(), "vector")?;
    Ok(vec_norm(&(&ipn.r * x)))
}

/// `||M||_H = ||R M R^{-1}||_2`.
pub fn h_matrix_norm(m: &CMatrix, ipn: &InnerProductNorm) -> Result<f64> {
    ipn.check(m.nrows(), "matrix")?;
    ipn.check(m.ncols(), "matrix")?;
    Ok(norm2(&ipn.right_inverse(&(&ipn.r * m))?))
}

/// `(A R^{-1}, E R^{-1})`, whose 2-norm DAE pseudospectra are the H-norm
/// pseudospectra of `(A, E)`.
pub fn h_pseudospectra_transform(p: &Pencil, ipn: &InnerProductNorm) -> Result<Pencil> {
    ipn.check(p.dim(), "pencil")?;
    Pencil::new(ipn.right_inverse(p.a())?, ipn.right_inverse(p.e())?)
}

/// `S M S^{-1}` together with the QR factors of `R Q`.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedGenerator {
    #[serde(skip)]
    pub z: CMatrix,
    #[serde(skip)]
    pub s: CMatrix,
    /// Upper triangular, similar to the DAE generator.
    #[serde(skip)]
    pub generator: CMatrix,
    pub mu: num_complex::Complex64,
}

impl WeightedGenerator {
    pub fn operator(&self) -> Result<ResolventOperator> {
        ResolventOperator::from_matrix(&self.generator)
    }
}

/// H-norm generator from an existing 2-norm decomposition.
pub fn h_pseudospectra_schur(fd: &FiniteDecomposition, ipn: &InnerProductNorm) -> Result<WeightedGenerator> {
    ipn.check(fd.dim(), "decomposition")?;
    let qr = qr_economy(&(&ipn.r * &fd.q))?;
    let sm = &qr.s * &fd.generator;
    let generator = solve_upper_triangular_adjoint(&qr.s, &sm.adjoint())?.adjoint();
    Ok(WeightedGenerator { z: qr.z, s: qr.s, generator, mu: fd.mu })
}

/// H-norm field by transforming the pencil and decomposing it afresh.
pub fn h_field_transform(
    p: &Pencil,
    ipn: &InnerProductNorm,
    mu: num_complex::Complex64,
    d_hint: Option<usize>,
    grid: &GridSpec,
    exec: Execution,
) -> Result<ResolventField> {
    let fd = decompose(&h_pseudospectra_transform(p, ipn)?, mu, d_hint)?;
    ResolventOperator::from_decomposition(&fd).field(grid, FieldKind::Dae, Some(mu), exec)
}

/// H-norm field from the 2-norm decomposition.
pub fn h_field_schur(fd: &FiniteDecomposition, ipn: &InnerProductNorm, grid: &GridSpec, exec: Execution) -> Result<ResolventField> {
    h_pseudospectra_schur(fd, ipn)?
        .operator()?
        .field(grid, FieldKind::Dae, Some(fd.mu), exec)
}
