//! Pseudospectra of the DAE generator `M = G^{-1} + mu I` on rectangular
//! grids, together with the two classical pencil definitions used for
//! comparison:
//!
//! * `dae`:  `sigma_min(zI - M)`, independent of `mu` and of row operations
//!   on the pencil;
//! * `gen1`: `sigma_min(zE - A)`;
//! * `ruhe`: `sigma_min(zI - E^{-1} A)`, defined only for invertible `E`.

mod contours;
mod numrange;

pub use contours::{extract_contours, ContourLevel, ContourSet, Polyline};
pub use numrange::{check_inclusion, numerical_range, numerical_range_of, NumericalRangeBoundary};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{
    self, c64, condition_estimate, frobenius, is_upper_triangular, lu_solve,
    smallest_singular_value, CMatrix, EPS,
};
use crate::pencil::{FiniteDecomposition, Pencil};

/// Rectangular lattice in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = GridSpec { re_min, re_max, im_min, im_max, nx, ny };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || !(self.re_min < self.re_max) || !(self.im_min < self.im_max) {
            return Err(Error::InvalidArgument(format!(
                "grid window [{}, {}] x [{}, {}] is empty or not finite",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points per direction, got {}x{}",
                self.nx, self.ny
            )));
        }
        Ok(())
    }

    /// Real coordinate of column `ix`. The product is formed before the
    /// division so that refined lattices reproduce coarse points bit for bit.
    pub fn x(&self, ix: usize) -> f64 {
        self.re_min + (self.re_max - self.re_min) * ix as f64 / (self.nx - 1) as f64
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.im_min + (self.im_max - self.im_min) * iy as f64 / (self.ny - 1) as f64
    }

    pub fn z(&self, ix: usize, iy: usize) -> Complex64 {
        c64(self.x(ix), self.y(iy))
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dx(&self) -> f64 {
        (self.re_max - self.re_min) / (self.nx - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        (self.im_max - self.im_min) / (self.ny - 1) as f64
    }

    /// Flat index with `ix` varying fastest.
    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.nx + ix
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Dae,
    Gen1,
    Ruhe,
}

impl std::fmt::Display for FieldKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FieldKind::Dae => "dae",
            FieldKind::Gen1 => "gen1",
            FieldKind::Ruhe => "ruhe",
        })
    }
}

impl std::str::FromStr for FieldKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dae" => Ok(FieldKind::Dae),
            "gen1" => Ok(FieldKind::Gen1),
            "ruhe" => Ok(FieldKind::Ruhe),
            other => Err(Error::InvalidArgument(format!("unknown field kind {other:?}"))),
        }
    }
}

/// `sigma_min` sampled on a grid. A stored zero marks a point that is an
/// eigenvalue to working precision (infinite resolvent norm).
#[derive(Debug, Clone, Serialize)]
pub struct ResolventField {
    pub grid: GridSpec,
    pub kind: FieldKind,
    pub mu: Option<Complex64>,
    /// Row-major values, `ix` fastest.
    pub sigmin: Vec<f64>,
}

impl ResolventField {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.sigmin[self.grid.index(ix, iy)]
    }

    pub fn min(&self) -> f64 {
        self.sigmin.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.sigmin.iter().copied().fold(0.0, f64::max)
    }

    /// Resolvent norm at a grid point (`+inf` for the sentinel).
    pub fn resolvent_norm(&self, ix: usize, iy: usize) -> f64 {
        let s = self.get(ix, iy);
        if s == 0.0 {
            f64::INFINITY
        } else {
            1.0 / s
        }
    }

    /// Iterate over `(z, sigmin)`.
    pub fn points(&self) -> impl Iterator<Item = (Complex64, f64)> + '_ {
        (0..self.grid.ny).flat_map(move |iy| {
            (0..self.grid.nx).map(move |ix| (self.grid.z(ix, iy), self.get(ix, iy)))
        })
    }

    /// Largest relative pointwise difference to another field on the same grid.
    pub fn max_relative_difference(&self, other: &ResolventField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        Ok(self
            .sigmin
            .iter()
            .zip(&other.sigmin)
            .map(|(&a, &b)| relative_difference(a, b))
            .fold(0.0, f64::max))
    }

    /// Largest pointwise ratio `max(a/b, b/a)` to another field.
    pub fn max_ratio(&self, other: &ResolventField) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Dimension("fields live on different grids".into()));
        }
        Ok(self
            .sigmin
            .iter()
            .zip(&other.sigmin)
            .map(|(&a, &b)| {
                if a == b {
                    1.0
                } else if a == 0.0 || b == 0.0 {
                    f64::INFINITY
                } else {
                    (a / b).max(b / a)
                }
            })
            .fold(1.0, f64::max))
    }
}

/// `|a - b| / max(a, b)`, zero when both vanish.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// `sigma_min(zI - T)` for an upper-triangular `T`, precomputed once so every
/// grid point costs one triangular SVD or a few triangular solves.
#[derive(Debug, Clone)]
pub struct ResolventOperator {
    t: CMatrix,
    scale: f64,
}

impl ResolventOperator {
    /// Wrap an upper-triangular matrix.
    pub fn from_triangular(t: CMatrix) -> Result<Self> {
        if !is_upper_triangular(&t) {
            return Err(Error::InvalidArgument("operator is not upper triangular".into()));
        }
        let scale = frobenius(&t);
        Ok(ResolventOperator { t, scale })
    }

    /// Any square matrix; non-triangular input is replaced by its Schur factor
    /// (a unitary similarity, which leaves every singular value of `zI - M`
    /// unchanged).
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if is_upper_triangular(m) {
            return Self::from_triangular(m.clone());
        }
        let sf = linalg::schur(m)?;
        Self::from_triangular(sf.t)
    }

    pub fn from_decomposition(fd: &FiniteDecomposition) -> Self {
        ResolventOperator { t: fd.generator.clone(), scale: frobenius(&fd.generator) }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.t
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|i| self.t[(i, i)]).collect()
    }

    /// `sigma_min(zI - T)`; exactly zero when `z` is an eigenvalue to working
    /// precision.
    pub fn sigmin(&self, z: Complex64) -> f64 {
        let m = self.dim();
        let mut a = -&self.t;
        for i in 0..m {
            a[(i, i)] += z;
        }
        let s = smallest_singular_value(&a);
        let floor = 10.0 * m as f64 * EPS * (self.scale + z.norm() * (m as f64).sqrt());
        if s <= floor {
            0.0
        } else {
            s
        }
    }

    pub fn resolvent_norm(&self, z: Complex64) -> f64 {
        let s = self.sigmin(z);
        if s == 0.0 {
            f64::INFINITY
        } else {
            1.0 / s
        }
    }

    /// Evaluate on a grid.
    pub fn field(&self, grid: &GridSpec, kind: FieldKind, mu: Option<Complex64>, exec: Execution) -> Result<ResolventField> {
        grid.validate()?;
        let sigmin = exec.map(grid.len(), |k| {
            let (ix, iy) = (k % grid.nx, k / grid.nx);
            self.sigmin(grid.z(ix, iy))
        });
        Ok(ResolventField { grid: *grid, kind, mu, sigmin })
    }

    /// Field that is exact wherever it matters for the single level `epsilon`.
    ///
    /// `sigma_min(zI - M)` is 1-Lipschitz in `z`, so values on a coarse
    /// sub-lattice certify for most points on which side of `epsilon` they
    /// lie; those get the certifying bound instead of a solve. Every corner
    /// of a cell the level crosses is evaluated exactly, so level curves,
    /// sublevel membership and the marching-squares saddle rule agree with
    /// [`ResolventOperator::field`].
    pub fn sublevel_field(&self, grid: &GridSpec, epsilon: f64, exec: Execution) -> Result<ResolventField> {
        grid.validate()?;
        const STRIDE: usize = 4;
        let (nx, ny) = (grid.nx, grid.ny);
        let coarse_axis = |n: usize| -> Vec<usize> {
            let mut v: Vec<usize> = (0..n).step_by(STRIDE).collect();
            if *v.last().unwrap() != n - 1 {
                v.push(n - 1);
            }
            v
        };
        let (cx, cy) = (coarse_axis(nx), coarse_axis(ny));
        let coarse: Vec<usize> = cy.iter().flat_map(|&iy| cx.iter().map(move |&ix| grid.index(ix, iy))).collect();
        let mut sigmin = vec![f64::NAN; grid.len()];
        let mut exact = vec![false; grid.len()];
        let values = exec.map_slice(&coarse, |&k| self.sigmin(grid.z(k % nx, k / nx)));
        for (&k, v) in coarse.iter().zip(values) {
            sigmin[k] = v;
            exact[k] = true;
        }
        // certified lower bound from the enclosing coarse corners
        let bracket = |axis: &[usize], i: usize| -> [usize; 2] {
            let p = axis.partition_point(|&c| c <= i) - 1;
            [axis[p], axis[(p + 1).min(axis.len() - 1)]]
        };
        let slack = 1e-10 * (self.scale + 1.0);
        let mut pending = Vec::new();
        for iy in 0..ny {
            for ix in 0..nx {
                let k = grid.index(ix, iy);
                if exact[k] {
                    continue;
                }
                let z = grid.z(ix, iy);
                let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
                for &jy in &bracket(&cy, iy) {
                    for &jx in &bracket(&cx, ix) {
                        let (s, r) = (sigmin[grid.index(jx, jy)], (z - grid.z(jx, jy)).norm());
                        lower = lower.max(s - r - slack);
                        upper = upper.min(s + r + slack);
                    }
                }
                if lower > epsilon {
                    sigmin[k] = lower;
                } else if upper < epsilon {
                    sigmin[k] = upper;
                } else {
                    pending.push(k);
                }
            }
        }
        self.resolve_points(grid, &pending, &mut sigmin, &mut exact, exec);
        // corners of cells the level crosses must all be exact
        let mut pending = Vec::new();
        for iy in 0..ny.saturating_sub(1) {
            for ix in 0..nx.saturating_sub(1) {
                let corners = [grid.index(ix, iy), grid.index(ix + 1, iy), grid.index(ix, iy + 1), grid.index(ix + 1, iy + 1)];
                let below = corners.iter().filter(|&&k| sigmin[k] <= epsilon).count();
                if below > 0 && below < 4 {
                    pending.extend(corners.into_iter().filter(|&k| !exact[k]));
                }
            }
        }
        pending.sort_unstable();
        pending.dedup();
        self.resolve_points(grid, &pending, &mut sigmin, &mut exact, exec);
        Ok(ResolventField { grid: *grid, kind: FieldKind::Dae, mu: None, sigmin })
    }

    fn resolve_points(&self, grid: &GridSpec, points: &[usize], sigmin: &mut [f64], exact: &mut [bool], exec: Execution) {
        let values = exec.map_slice(points, |&k| self.sigmin(grid.z(k % grid.nx, k / grid.nx)));
        for (&k, v) in points.iter().zip(values) {
            sigmin[k] = v;
            exact[k] = true;
        }
    }
}

/// `sigma_min(zI - M)` for a generator held as an upper-triangular matrix.
pub(crate) fn generator_sigmin(m: &CMatrix, z: Complex64) -> f64 {
    ResolventOperator { t: m.clone(), scale: frobenius(m) }.sigmin(z)
}

/// `||(zI - M)^{-1}||` with `+inf` at eigenvalues.
pub fn resolvent_norm(fd: &FiniteDecomposition, z: Complex64) -> f64 {
    ResolventOperator::from_decomposition(fd).resolvent_norm(z)
}

/// DAE pseudospectra field.
pub fn pseudospectra_grid(fd: &FiniteDecomposition, grid: &GridSpec, exec: Execution) -> Result<ResolventField> {
    ResolventOperator::from_decomposition(fd).field(grid, FieldKind::Dae, Some(fd.mu), exec)
}

/// Classical pencil pseudospectra: `gen1` or `ruhe`.
pub fn legacy_grid(p: &Pencil, grid: &GridSpec, kind: FieldKind, exec: Execution) -> Result<ResolventField> {
    grid.validate()?;
    match kind {
        FieldKind::Dae => Err(Error::InvalidArgument(
            "legacy_grid computes gen1 or ruhe fields; use pseudospectra_grid for dae".into(),
        )),
        FieldKind::Gen1 => {
            let sigmin = exec.map(grid.len(), |k| {
                let z = grid.z(k % grid.nx, k / grid.nx);
                smallest_singular_value(&(p.e() * z - p.a()))
            });
            Ok(ResolventField { grid: *grid, kind, mu: None, sigmin })
        }
        FieldKind::Ruhe => {
            let op = ResolventOperator::from_matrix(&ruhe_matrix(p)?)?;
            op.field(grid, kind, None, exec)
        }
    }
}

/// `E^{-1} A`, refusing singular `E`.
pub fn ruhe_matrix(p: &Pencil) -> Result<CMatrix> {
    let cond = condition_estimate(p.e());
    if !cond.is_finite() || cond * 100.0 * EPS > 1.0 {
        return Err(Error::SingularE);
    }
    lu_solve(p.e(), p.a()).map_err(|_| Error::SingularE)
}
