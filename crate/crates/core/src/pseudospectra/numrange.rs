//! Boundary of the numerical range `W = {x* M x : ||x|| = 1}` of the DAE
//! generator, by the supporting-line sweep: for each direction `e^{i phi}` the
//! top eigenvector `x` of `(e^{-i phi} M + e^{i phi} M*)/2` gives the boundary
//! point `x* M x` extreme in that direction.

use num_complex::Complex64;
use serde::Serialize;

use super::ResolventField;
use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_max_eig, CMatrix};
use crate::pencil::FiniteDecomposition;

#[derive(Debug, Clone, Serialize)]
pub struct NumericalRangeBoundary {
    /// Outward normal angles, uniformly spaced in `[0, 2 pi)`.
    pub theta: Vec<f64>,
    /// Boundary points, counter-clockwise.
    pub points: Vec<Complex64>,
    /// Support values `max Re(e^{-i theta} z)` over `W`.
    pub support: Vec<f64>,
    /// Numerical abscissa `max Re z` over `W`.
    pub omega: f64,
}

impl NumericalRangeBoundary {
    /// `z` satisfies every sampled supporting half-plane, dilated by `slack`.
    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        self.theta
            .iter()
            .zip(&self.support)
            .all(|(&th, &h)| (c64(0.0, -th).exp() * z).re <= h + slack)
    }

    /// Largest violation of the polygon's counter-clockwise turn condition,
    /// `max(0, -cross)` over consecutive edges, relative to the squared diameter.
    pub fn convexity_defect(&self) -> f64 {
        let p = &self.points;
        let n = p.len();
        let diam = p
            .iter()
            .flat_map(|a| p.iter().map(move |b| (a - b).norm()))
            .fold(0.0, f64::max);
        if diam == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let a = p[i];
            let b = p[(i + 1) % n];
            let c = p[(i + 2) % n];
            let (u, v) = (b - a, c - b);
            let cross = u.re * v.im - u.im * v.re;
            worst = worst.max(-cross);
        }
        worst / (diam * diam)
    }
}

/// Sweep `n_theta` directions over the numerical range of `G^{-1} + mu I`.
pub fn numerical_range(fd: &FiniteDecomposition, n_theta: usize) -> Result<NumericalRangeBoundary> {
    numerical_range_of(&fd.generator, n_theta)
}

pub fn numerical_range_of(m: &CMatrix, n_theta: usize) -> Result<NumericalRangeBoundary> {
    if n_theta < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 directions, got {n_theta}")));
    }
    let mut theta = Vec::with_capacity(n_theta);
    let mut points = Vec::with_capacity(n_theta);
    let mut support = Vec::with_capacity(n_theta);
    for k in 0..n_theta {
        let th = 2.0 * std::f64::consts::PI * k as f64 / n_theta as f64;
        let rot = if k == 0 { c64(1.0, 0.0) } else { c64(0.0, -th).exp() };
        let (lam, x) = hermitian_max_eig(&(m * rot));
        let z = (x.adjoint() * m * &x)[(0, 0)];
        theta.push(th);
        points.push(z);
        support.push(lam);
    }
    let omega = support[0];
    Ok(NumericalRangeBoundary { theta, points, support, omega })
}

/// Grid points of the eps-pseudospectrum that lie outside the numerical range
/// dilated by `eps` (checked against every sampled supporting half-plane).
pub fn check_inclusion(fd: &FiniteDecomposition, field: &ResolventField, epsilon: f64) -> Result<usize> {
    let nr = numerical_range(fd, 256)?;
    Ok(count_violations(&nr, field, epsilon))
}

pub(crate) fn count_violations(nr: &NumericalRangeBoundary, field: &ResolventField, epsilon: f64) -> usize {
    let scale = nr.support.iter().map(|h| h.abs()).fold(1.0, f64::max);
    let slack = epsilon + 1e-10 * scale;
    field
        .points()
        .filter(|&(z, s)| s < epsilon && !nr.contains(z, slack))
        .count()
}
