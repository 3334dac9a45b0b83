//! Difference-algebraic systems `E x_{k+1} = A x_k`. Consistent states stay
//! in `Ran(Q)` and evolve as `x_k = Q M^k Q* x0` with the same generator
//! `M = G^{-1} + mu I` as in continuous time, so the pseudospectral radius
//! plays the role of the pseudospectral abscissa.

use serde::Serialize;

use super::crisscross::{self, Level};
use super::{sup_ratio, Extremum, KreissConstant, Strategy};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{self, CVector};
use crate::pencil::{require_consistent, FiniteDecomposition, Pencil};
use crate::pseudospectra::ResolventOperator;

/// `x_k = Q M^k Q* x0` for a consistent `x0`.
pub fn discrete_solution(fd: &FiniteDecomposition, x0: &CVector, k: usize) -> Result<CVector> {
    require_consistent(fd, x0)?;
    let mut y = fd.q.adjoint() * x0;
    for _ in 0..k {
        y = &fd.generator * y;
    }
    Ok(&fd.q * y)
}

/// `x_0, .., x_{k_max}`.
pub fn discrete_trajectory(fd: &FiniteDecomposition, x0: &CVector, k_max: usize) -> Result<Vec<CVector>> {
    require_consistent(fd, x0)?;
    let mut y = fd.q.adjoint() * x0;
    let mut out = Vec::with_capacity(k_max + 1);
    out.push(&fd.q * &y);
    for _ in 0..k_max {
        y = &fd.generator * y;
        out.push(&fd.q * &y);
    }
    Ok(out)
}

/// `||E x_{k+1} - A x_k|| / ((||A|| + ||E||) ||x_k||)`, with Frobenius norms
/// for the matrices.
pub fn difference_residual(p: &Pencil, xk: &CVector, xk1: &CVector) -> f64 {
    let r = p.e() * xk1 - p.a() * xk;
    let scale = (linalg::frobenius(p.a()) + linalg::frobenius(p.e())) * linalg::vec_norm(xk);
    if scale == 0.0 {
        linalg::vec_norm(&r)
    } else {
        linalg::vec_norm(&r) / scale
    }
}

/// `(k, ||M^k||)` for `k = 0..=k_max`.
pub fn power_norm_curve(fd: &FiniteDecomposition, k_max: usize) -> Vec<(usize, f64)> {
    let m = &fd.generator;
    let mut p = linalg::CMatrix::identity(m.nrows(), m.ncols());
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        out.push((k, linalg::norm2(&p)));
        p = m * p;
    }
    out
}

/// `rho_eps`: the largest modulus over the eps-pseudospectrum.
pub fn pseudospectral_radius(fd: &FiniteDecomposition, epsilon: f64) -> Result<f64> {
    let op = ResolventOperator::from_decomposition(fd);
    Ok(pseudospectral_radius_with(&op, epsilon, Strategy::Auto)?.value)
}

pub fn pseudospectral_radius_with(op: &ResolventOperator, epsilon: f64, strategy: Strategy) -> Result<Extremum> {
    let lv = Level::new(op, epsilon)?;
    match strategy {
        Strategy::Auto => crisscross::radius(&lv),
        Strategy::CrissCross => {
            crisscross::radius_criss_cross(&lv)?.ok_or(Error::NoConvergence { index: 0, iterations: 0 })
        }
        Strategy::Grid(n) => crisscross::radius_grid(&lv, n),
    }
}

/// Extension beyond the continuous-time theory: the Kreiss constant with
/// respect to the unit disk, `sup_eps (rho_eps - 1) / eps`.
pub fn discrete_kreiss_extension(op: &ResolventOperator, exec: Execution) -> Result<KreissConstant> {
    let rho = op.eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    sup_ratio(|e| Ok(pseudospectral_radius_with(op, e, Strategy::Auto)?.value), 1.0, rho, exec)
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteReport {
    pub power_curve: Vec<(usize, f64)>,
    pub rho_eps: Vec<(f64, f64)>,
    pub spectral_radius: f64,
    /// Unit-disk Kreiss constant; an extension, not part of the core theory.
    pub kreiss_extension: KreissConstant,
}

pub fn discrete_report(fd: &FiniteDecomposition, epsilons: &[f64], k_max: usize, exec: Execution) -> Result<DiscreteReport> {
    let op = ResolventOperator::from_decomposition(fd);
    let rho_eps = exec
        .map_slice(epsilons, |&e| pseudospectral_radius_with(&op, e, Strategy::Auto).map(|r| (e, r.value)))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(DiscreteReport {
        power_curve: power_norm_curve(fd, k_max),
        rho_eps,
        spectral_radius: op.eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max),
        kreiss_extension: discrete_kreiss_extension(&op, exec)?,
    })
}
