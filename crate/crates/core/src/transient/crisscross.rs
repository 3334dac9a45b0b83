//! Extremal points of the eps-pseudospectrum of a square matrix `M`.
//!
//! * Abscissa (`max Re z`): criss-cross iteration. Vertical searches find the
//!   boundary crossings on a line `Re z = x` as imaginary eigenvalues of a
//!   `2m x 2m` Hamiltonian-structured matrix; horizontal searches from the
//!   midpoints of the crossed intervals find the rightmost crossing on
//!   `Im z = y` as the largest real eigenvalue of a companion matrix.
//! * Radius (`max |z|`): the same idea in polar coordinates. Radial searches
//!   are horizontal searches on a rotated matrix; circle searches find the
//!   crossings on `|z| = r` as unimodular eigenvalues of a `2m x 2m` pencil,
//!   located through a Cayley transform.
//!
//! Both fall back to a brute-force lattice plus bisection when a search
//! returns no usable candidate; the result records which path was taken.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, c64, condition_estimate, frobenius, hermitian_max_eig, norm2, CMatrix, LuFactor, EPS};
use crate::pseudospectra::ResolventOperator;

/// Stopping tolerance on the improvement of one criss-cross sweep, relative
/// to `max(1, |x|)`.
pub const CRISS_CROSS_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 60;
const BISECTION_STEPS: usize = 60;
/// Lattice resolution of the fallback oracles.
pub const ORACLE_RESOLUTION: usize = 201;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMethod {
    CrissCross,
    GridFallback,
}

/// Value of an extremal search together with the point attaining it.
#[derive(Debug, Clone, Serialize)]
pub struct Extremum {
    pub value: f64,
    pub point: Complex64,
    pub method: SearchMethod,
    pub sweeps: usize,
}

/// Shared evaluation context: the Schur-triangular form of `M` and scales.
pub(crate) struct Level<'a> {
    pub op: &'a ResolventOperator,
    pub eps: f64,
    scale: f64,
}

impl<'a> Level<'a> {
    pub fn new(op: &'a ResolventOperator, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be positive and finite, got {eps}")));
        }
        Ok(Level { op, eps, scale: frobenius(op.matrix()) })
    }

    fn m(&self) -> &CMatrix {
        self.op.matrix()
    }

    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn sigmin(&self, z: Complex64) -> f64 {
        self.op.sigmin(z)
    }

    fn inside(&self, z: Complex64) -> bool {
        self.sigmin(z) < self.eps
    }

    /// Tolerance for deciding that a computed eigenvalue lies on the real or
    /// imaginary axis (tangential crossings are double roots, perturbed by
    /// `O(sqrt(eps))`).
    fn axis_tol(&self, h: &CMatrix) -> f64 {
        10.0 * EPS.sqrt() * frobenius(h).max(1.0)
    }

    /// Accept a candidate boundary point when `sigma_min` matches the level.
    fn on_boundary(&self, z: Complex64) -> bool {
        let s = self.sigmin(z);
        let m = self.dim() as f64;
        (s - self.eps).abs() <= 1e-6 * self.eps + 100.0 * m * EPS * (self.scale + z.norm())
    }
}

fn block2(a: &CMatrix, b: &CMatrix, c: &CMatrix, d: &CMatrix) -> CMatrix {
    let m = a.nrows();
    let mut h = CMatrix::zeros(2 * m, 2 * m);
    h.view_mut((0, 0), (m, m)).copy_from(a);
    h.view_mut((0, m), (m, m)).copy_from(b);
    h.view_mut((m, 0), (m, m)).copy_from(c);
    h.view_mut((m, m), (m, m)).copy_from(d);
    h
}

fn scaled_identity(m: usize, s: f64) -> CMatrix {
    CMatrix::identity(m, m) * c64(s, 0.0)
}

/// All `y` with `eps` a singular value of `(x + iy)I - M`, ascending.
pub(crate) fn vertical_crossings(lv: &Level, x: f64) -> Result<Vec<f64>> {
    let m = lv.dim();
    let a = linalg::shift_diagonal(&(-lv.m()), c64(x, 0.0));
    let h = block2(&a, &scaled_identity(m, -lv.eps), &scaled_identity(m, lv.eps), &(-a.adjoint()));
    let tol = lv.axis_tol(&h);
    let mut ys: Vec<f64> = linalg::eigenvalues(&h)?
        .into_iter()
        .filter(|l| l.re.abs() <= tol)
        .map(|l| -l.im)
        .collect();
    ys.sort_by(f64::total_cmp);
    Ok(ys)
}

/// All `x` with `eps` a singular value of `(x + iy)I - M`, descending.
pub(crate) fn horizontal_crossings(lv: &Level, y: f64) -> Result<Vec<f64>> {
    let m = lv.dim();
    let b = linalg::shift_diagonal(&(-lv.m()), c64(0.0, y));
    let off = scaled_identity(m, -lv.eps);
    let h = block2(&b, &off, &off, &b.adjoint());
    let tol = lv.axis_tol(&h);
    let mut xs: Vec<f64> = linalg::eigenvalues(&h)?
        .into_iter()
        .filter(|l| l.im.abs() <= tol)
        .map(|l| -l.re)
        .collect();
    xs.sort_by(|a, b| b.total_cmp(a));
    Ok(xs)
}

/// Rightmost verified boundary point on `Im z = y`.
fn rightmost_on_line(lv: &Level, y: f64) -> Result<Option<f64>> {
    Ok(horizontal_crossings(lv, y)?
        .into_iter()
        .find(|&x| lv.on_boundary(c64(x, y))))
}

/// Criss-cross iteration for `max Re z` over `sigma_min(zI - M) < eps`.
pub(crate) fn abscissa_criss_cross(lv: &Level) -> Result<Option<Extremum>> {
    let mut best: Option<(f64, f64)> = None;
    for lam in lv.op.eigenvalues() {
        if let Some(x) = rightmost_on_line(lv, lam.im)? {
            if best.is_none_or(|(bx, _)| x > bx) {
                best = Some((x, lam.im));
            }
        }
    }
    let Some((mut x, mut y)) = best else { return Ok(None) };
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let ys = vertical_crossings(lv, x)?;
        let mut improved = x;
        let mut arg = y;
        for w in ys.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            if !lv.inside(c64(x, mid)) {
                continue;
            }
            match rightmost_on_line(lv, mid)? {
                Some(xn) if xn > improved => {
                    improved = xn;
                    arg = mid;
                }
                Some(_) => {}
                None => return Ok(None),
            }
        }
        let gain = improved - x;
        x = improved;
        y = arg;
        if gain <= CRISS_CROSS_TOL * x.abs().max(1.0) {
            break;
        }
    }
    Ok(Some(Extremum { value: x, point: c64(x, y), method: SearchMethod::CrissCross, sweeps }))
}

/// `h(phi) = max Re(e^{-i phi} z)` over the numerical range of `M`.
fn support(m: &CMatrix, phi: f64) -> f64 {
    hermitian_max_eig(&(m * c64(0.0, -phi).exp())).0
}

/// Bisection for the crossing between an inside point `a` and an outside
/// point `b`.
fn bisect(lv: &Level, mut a: Complex64, mut b: Complex64) -> Complex64 {
    for _ in 0..BISECTION_STEPS {
        let mid = (a + b) * 0.5;
        if lv.inside(mid) {
            a = mid;
        } else {
            b = mid;
        }
    }
    a
}

/// Lattice oracle for the abscissa: `n x n` points over a box certified to
/// contain the pseudospectrum (numerical range dilated by `eps`), the
/// rightmost inside point of every row refined by bisection.
pub(crate) fn abscissa_grid(lv: &Level, n: usize) -> Result<Extremum> {
    use std::f64::consts::PI;
    let m = lv.m();
    let e = lv.eps;
    let (x0, x1) = (-support(m, PI) - e, support(m, 0.0) + e);
    let (y0, y1) = (-support(m, 1.5 * PI) - e, support(m, 0.5 * PI) + e);
    let n = n.max(3);
    let xs: Vec<f64> = (0..n).map(|i| x0 + (x1 - x0) * i as f64 / (n - 1) as f64).collect();
    let mut best = Extremum { value: f64::NEG_INFINITY, point: c64(f64::NAN, f64::NAN), method: SearchMethod::GridFallback, sweeps: 0 };
    for iy in 0..n {
        let y = y0 + (y1 - y0) * iy as f64 / (n - 1) as f64;
        let Some(ix) = (0..n).rev().find(|&ix| lv.inside(c64(xs[ix], y))) else { continue };
        let z = if ix + 1 < n { bisect(lv, c64(xs[ix], y), c64(xs[ix + 1], y)) } else { c64(xs[ix], y) };
        if z.re > best.value {
            best.value = z.re;
            best.point = z;
        }
    }
    // eigenvalues are always inside; guard against a lattice missing a tiny component
    for lam in lv.op.eigenvalues() {
        if lam.re > best.value {
            let z = bisect(lv, lam, c64(x1 + e, lam.im));
            best.value = z.re;
            best.point = z;
        }
    }
    Ok(best)
}

/// `max Re z` over the eps-pseudospectrum, criss-cross first, lattice
/// fallback when a search stalls.
pub(crate) fn abscissa(lv: &Level) -> Result<Extremum> {
    match abscissa_criss_cross(lv) {
        Ok(Some(ex)) => Ok(ex),
        Ok(None) | Err(Error::NoConvergence { .. }) => abscissa_grid(lv, ORACLE_RESOLUTION),
        Err(e) => Err(e),
    }
}

/// Largest `r` with `r e^{i theta}` on the boundary (`r >= 0`).
fn radial_search(lv: &Level, theta: f64) -> Result<Option<f64>> {
    let rot = c64(0.0, -theta).exp();
    let rotated = ResolventOperator::from_triangular(lv.m() * rot)?;
    let rl = Level { op: &rotated, eps: lv.eps, scale: lv.scale };
    Ok(horizontal_crossings(&rl, 0.0)?
        .into_iter()
        .filter(|&x| x >= 0.0)
        .find(|&x| lv.on_boundary(c64(0.0, theta).exp() * x)))
}

/// Angles `phi` with `eps` a singular value of `r e^{i phi} I - M`, ascending
/// in `[0, 2 pi)`. `None` when the Cayley transform cannot be formed for any
/// trial rotation.
pub(crate) fn circle_crossings(lv: &Level, r: f64) -> Result<Option<Vec<f64>>> {
    use std::f64::consts::PI;
    let m = lv.dim();
    let eps = lv.eps;
    for (k, beta) in [0.0, 0.37, 1.13, 2.41].into_iter().enumerate() {
        let rot = c64(0.0, -beta).exp();
        let mr = lv.m() * rot;
        // C [v; u] = w B [v; u] with |w| = 1 at the crossings
        let c = block2(&mr, &scaled_identity(m, eps), &CMatrix::zeros(m, m), &scaled_identity(m, r));
        let b = block2(&scaled_identity(m, r), &CMatrix::zeros(m, m), &scaled_identity(m, eps), &mr.adjoint());
        let sum = &c + &b;
        if condition_estimate(&sum) * EPS > 1e-8 {
            if k == 3 {
                return Ok(None);
            }
            continue;
        }
        let s_mat = match LuFactor::new(&sum).and_then(|lu| lu.solve(&(&c - &b))) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let tol = lv.axis_tol(&s_mat);
        let mut phis: Vec<f64> = linalg::eigenvalues(&s_mat)?
            .into_iter()
            .filter(|s| s.re.abs() <= tol * s.norm().max(1.0))
            .map(|s| {
                let w = (c64(1.0, 0.0) + s) / (c64(1.0, 0.0) - s);
                (w.arg() + beta).rem_euclid(2.0 * PI)
            })
            .collect();
        phis.sort_by(f64::total_cmp);
        return Ok(Some(phis));
    }
    Ok(None)
}

/// Radial criss-cross for `max |z|` over the eps-pseudospectrum.
pub(crate) fn radius_criss_cross(lv: &Level) -> Result<Option<Extremum>> {
    use std::f64::consts::PI;
    let mut best: Option<(f64, f64)> = None;
    for lam in lv.op.eigenvalues() {
        let theta = if lam.norm() > 0.0 { lam.arg() } else { 0.0 };
        if let Some(r) = radial_search(lv, theta)? {
            if best.is_none_or(|(br, _)| r > br) {
                best = Some((r, theta));
            }
        }
    }
    let Some((mut r, mut theta)) = best else { return Ok(None) };
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        // a circle search that cannot be formed leaves the radial result as is
        let Some(phis) = circle_crossings(lv, r)? else { break };
        let mut improved = r;
        let mut arg = theta;
        let k = phis.len();
        for i in 0..k {
            let (a, mut b) = (phis[i], phis[(i + 1) % k]);
            if i + 1 == k {
                b += 2.0 * PI;
            }
            let mid = 0.5 * (a + b);
            if !lv.inside(c64(0.0, mid).exp() * r) {
                continue;
            }
            match radial_search(lv, mid)? {
                Some(rn) if rn > improved => {
                    improved = rn;
                    arg = mid;
                }
                Some(_) => {}
                None => return Ok(None),
            }
        }
        let gain = improved - r;
        r = improved;
        theta = arg;
        if gain <= CRISS_CROSS_TOL * r.max(1.0) {
            break;
        }
    }
    Ok(Some(Extremum { value: r, point: c64(0.0, theta).exp() * r, method: SearchMethod::CrissCross, sweeps }))
}

/// Polar lattice oracle for the radius: `n` angles by `n` radii on
/// `[0, ||M|| + eps]`, the outermost inside radius of every ray refined by
/// bisection.
pub(crate) fn radius_grid(lv: &Level, n: usize) -> Result<Extremum> {
    use std::f64::consts::PI;
    let n = n.max(3);
    let rmax = norm2(lv.m()) + lv.eps;
    let mut best = Extremum { value: f64::NEG_INFINITY, point: c64(f64::NAN, f64::NAN), method: SearchMethod::GridFallback, sweeps: 0 };
    for it in 0..n {
        let dir = c64(0.0, 2.0 * PI * it as f64 / n as f64).exp();
        let rs = |i: usize| rmax * i as f64 / (n - 1) as f64;
        let Some(ir) = (0..n).rev().find(|&i| lv.inside(dir * rs(i))) else { continue };
        let z = if ir + 1 < n { bisect(lv, dir * rs(ir), dir * rs(ir + 1)) } else { dir * rs(ir) };
        if z.norm() > best.value {
            best.value = z.norm();
            best.point = z;
        }
    }
    for lam in lv.op.eigenvalues() {
        if lam.norm() > best.value {
            let dir = if lam.norm() > 0.0 { lam / lam.norm() } else { c64(1.0, 0.0) };
            let z = bisect(lv, lam, dir * (rmax + lv.eps));
            best.value = z.norm();
            best.point = z;
        }
    }
    Ok(best)
}

pub(crate) fn radius(lv: &Level) -> Result<Extremum> {
    match radius_criss_cross(lv) {
        Ok(Some(ex)) => Ok(ex),
        Ok(None) | Err(Error::NoConvergence { .. }) => radius_grid(lv, ORACLE_RESOLUTION),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{from_real_rows, re};
    use crate::linalg::testutil::random_matrix;

    fn op(m: &CMatrix) -> ResolventOperator {
        ResolventOperator::from_matrix(m).unwrap()
    }

    #[test]
    fn crossings_lie_on_the_level_set() {
        let m = random_matrix(5, 5, 11);
        let o = op(&m);
        let lv = Level::new(&o, 0.3).unwrap();
        let ys = vertical_crossings(&lv, 0.2).unwrap();
        assert!(!ys.is_empty());
        for y in ys {
            assert!((lv.sigmin(c64(0.2, y)) - 0.3).abs() < 1e-8, "y {y}");
        }
        let xs = horizontal_crossings(&lv, -0.1).unwrap();
        assert!(!xs.is_empty());
        for x in xs {
            assert!((lv.sigmin(c64(x, -0.1)) - 0.3).abs() < 1e-8, "x {x}");
        }
        let phis = circle_crossings(&lv, 1.0).unwrap().unwrap();
        assert!(!phis.is_empty());
        for p in phis {
            assert!((lv.sigmin(c64(0.0, p).exp()) - 0.3).abs() < 1e-8, "phi {p}");
        }
    }

    #[test]
    fn normal_abscissa_is_disk_edge() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 0)] = c64(-1.0, 2.0);
        m[(1, 1)] = c64(-0.5, -1.0);
        m[(2, 2)] = re(-3.0);
        let o = op(&m);
        for eps in [1e-3, 0.1, 1.0] {
            let lv = Level::new(&o, eps).unwrap();
            let a = abscissa(&lv).unwrap();
            assert_eq!(a.method, SearchMethod::CrissCross);
            assert!((a.value - (-0.5 + eps)).abs() < 1e-10, "{eps}: {}", a.value);
        }
    }

    #[test]
    fn criss_cross_matches_lattice_oracle() {
        for seed in 0..6 {
            let m = random_matrix(6, 6, 100 + seed) * c64(2.0, 0.0);
            let o = op(&m);
            for eps in [0.05, 0.5] {
                let lv = Level::new(&o, eps).unwrap();
                let cc = abscissa_criss_cross(&lv).unwrap().unwrap();
                let g = abscissa_grid(&lv, 101).unwrap();
                // the lattice can only under-estimate, by at most a row spacing
                assert!(g.value <= cc.value + 1e-9, "seed {seed}: {} > {}", g.value, cc.value);
                assert!(cc.value - g.value < 0.1, "seed {seed}: {} vs {}", cc.value, g.value);
            }
        }
    }

    #[test]
    fn radius_of_normal_matrix() {
        let m = from_real_rows(2, 2, &[0.5, 0.0, 0.0, -0.2]);
        let o = op(&m);
        for eps in [1e-4, 0.01, 0.3] {
            let lv = Level::new(&o, eps).unwrap();
            let r = radius(&lv).unwrap();
            assert!((r.value - (0.5 + eps)).abs() < 1e-10, "{eps}: {}", r.value);
        }
    }

    #[test]
    fn radius_of_zero() {
        let o = op(&CMatrix::zeros(1, 1));
        let lv = Level::new(&o, 0.25).unwrap();
        assert!((radius(&lv).unwrap().value - 0.25).abs() < 1e-12);
    }

    #[test]
    fn radius_matches_polar_oracle() {
        for seed in 0..4 {
            let m = random_matrix(5, 5, 300 + seed);
            let o = op(&m);
            let lv = Level::new(&o, 0.2).unwrap();
            let cc = radius_criss_cross(&lv).unwrap().unwrap();
            let g = radius_grid(&lv, 101).unwrap();
            assert!(g.value <= cc.value + 1e-9);
            let cell = 2.0 * std::f64::consts::PI * cc.value / 101.0;
            assert!(cc.value - g.value < cell, "seed {seed}: {} vs {}", cc.value, g.value);
        }
    }

    #[test]
    fn rejects_nonpositive_level() {
        let o = op(&CMatrix::zeros(1, 1));
        assert!(Level::new(&o, 0.0).is_err());
        assert!(Level::new(&o, f64::NAN).is_err());
    }
}
