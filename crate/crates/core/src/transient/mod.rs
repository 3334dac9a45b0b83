//! Transient-growth diagnostics of the DAE generator `M = G^{-1} + mu I`:
//! numerical abscissa, pseudospectral abscissa, Kreiss constant, lower and
//! upper bounds on `||e^{tM}||`, and the exponential-norm curve itself.
//! Discrete-time analogues live in [`discrete`].

mod crisscross;
pub mod discrete;

pub use crisscross::{Extremum, SearchMethod, CRISS_CROSS_TOL, ORACLE_RESOLUTION};
pub use discrete::{
    difference_residual, discrete_kreiss_extension, discrete_report, discrete_solution, discrete_trajectory,
    power_norm_curve, pseudospectral_radius, pseudospectral_radius_with, DiscreteReport,
};

use num_complex::Complex64;
use serde::Serialize;

use crisscross::Level;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{self, c64, condition_estimate, expm, hermitian_max_eig, hermitian_part, CMatrix, CVector};
use crate::pencil::FiniteDecomposition;
use crate::pseudospectra::{extract_contours, GridSpec, ResolventOperator};

/// How an extremal point of the pseudospectrum is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Criss-cross, with the lattice oracle as fallback.
    #[default]
    Auto,
    /// Criss-cross only; a stalled search is an error.
    CrissCross,
    /// Lattice of the given resolution plus bisection.
    Grid(usize),
}

/// Condition number above which the eigenvector bound is refused.
pub const EIGENVECTOR_CONDITION_LIMIT: f64 = 1e12;

/// Log-spaced epsilon samples used for the Kreiss constant.
pub fn kreiss_samples() -> Vec<f64> {
    (0..57).map(|k| 10f64.powf(-12.0 + 14.0 * k as f64 / 56.0)).collect()
}

/// `omega = lambda_max((M + M*)/2)`.
pub fn numerical_abscissa(fd: &FiniteDecomposition) -> f64 {
    numerical_abscissa_of(&fd.generator)
}

pub fn numerical_abscissa_of(m: &CMatrix) -> f64 {
    hermitian_max_eig(&hermitian_part(m)).0
}

/// `alpha_eps`: the largest real part over the eps-pseudospectrum.
pub fn pseudospectral_abscissa(fd: &FiniteDecomposition, epsilon: f64) -> Result<f64> {
    let op = ResolventOperator::from_decomposition(fd);
    Ok(pseudospectral_abscissa_with(&op, epsilon, Strategy::Auto)?.value)
}

pub fn pseudospectral_abscissa_with(op: &ResolventOperator, epsilon: f64, strategy: Strategy) -> Result<Extremum> {
    let lv = Level::new(op, epsilon)?;
    match strategy {
        Strategy::Auto => crisscross::abscissa(&lv),
        Strategy::CrissCross => crisscross::abscissa_criss_cross(&lv)?.ok_or(Error::NoConvergence {
            index: 0,
            iterations: 0,
        }),
        Strategy::Grid(n) => crisscross::abscissa_grid(&lv, n),
    }
}

/// Supremum of `ratio(eps)` over `eps > 0`, sampled on [`kreiss_samples`]
/// and refined by golden-section search in `log eps`.
#[derive(Debug, Clone, Serialize)]
pub struct KreissConstant {
    /// `+inf` when the ratio is unbounded as `eps -> 0`.
    pub value: f64,
    /// Maximizing (or, for the unbounded case, certifying) epsilon.
    pub eps_star: f64,
    /// `(eps, ratio)` samples.
    pub samples: Vec<(f64, f64)>,
}

/// Sup of `(f(eps) - offset) / eps`. The ratio tends to 1 as `eps -> inf`,
/// so the supremum is at least 1; it is unbounded when `f(0) > offset` or
/// when `f(0) = offset` with the ratio still increasing at the smallest
/// sample.
pub(crate) fn sup_ratio<F>(f: F, offset: f64, f0: f64, exec: Execution) -> Result<KreissConstant>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    let eps = kreiss_samples();
    let vals = exec.map(eps.len(), |k| f(eps[k]).map(|v| (v - offset) / eps[k]));
    let ratios: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    let samples: Vec<(f64, f64)> = eps.iter().copied().zip(ratios.iter().copied()).collect();
    let (kmax, &rmax) = ratios
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("samples are nonempty");
    if f0 > offset || (f0 >= offset && kmax == 0) {
        return Ok(KreissConstant { value: f64::INFINITY, eps_star: eps[0], samples });
    }
    let mut best = (rmax, eps[kmax]);
    if kmax > 0 && kmax + 1 < eps.len() {
        let g = |le: f64| f(le.exp()).map(|v| (v - offset) / le.exp());
        let (mut a, mut b) = (eps[kmax - 1].ln(), eps[kmax + 1].ln());
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (g(c)?, g(d)?);
        while b - a > 1e-7 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = g(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = g(d)?;
            }
        }
        for (r, le) in [(fc, c), (fd, d)] {
            if r > best.0 {
                best = (r, le.exp());
            }
        }
    }
    if best.0 < 1.0 {
        // attained only in the limit eps -> inf
        best = (1.0, f64::INFINITY);
    }
    Ok(KreissConstant { value: best.0, eps_star: best.1, samples })
}

/// Kreiss constant `sup_eps alpha_eps / eps` with respect to the left half-plane.
pub fn kreiss_constant(fd: &FiniteDecomposition) -> Result<KreissConstant> {
    kreiss_constant_of(&ResolventOperator::from_decomposition(fd), Execution::default())
}

pub fn kreiss_constant_of(op: &ResolventOperator, exec: Execution) -> Result<KreissConstant> {
    let alpha = op.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    sup_ratio(|e| Ok(pseudospectral_abscissa_with(op, e, Strategy::Auto)?.value), 0.0, alpha, exec)
}

/// `e^{tau a} / (1 + eps (e^{tau a} - 1) / a)` for `a = alpha_eps > 0`.
pub fn timed_lower_bound(alpha_eps: f64, epsilon: f64, tau: f64) -> Result<f64> {
    if !(alpha_eps > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "timed growth bound needs a positive pseudospectral abscissa, got {alpha_eps}"
        )));
    }
    if !(tau > 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("tau and epsilon must be positive".into()));
    }
    // divide through by e^{tau a} so large tau saturates at a / eps
    let inv = (-tau * alpha_eps).exp();
    Ok(1.0 / (inv + epsilon * (1.0 - inv) / alpha_eps))
}

/// Lower bound on `max_{[0, tau]} ||e^{tM}||` from `alpha_eps`.
pub fn growth_lower_bound_timed(fd: &FiniteDecomposition, epsilon: f64, tau: f64) -> Result<f64> {
    timed_lower_bound(pseudospectral_abscissa(fd, epsilon)?, epsilon, tau)
}

/// `||e^{tM}||` on a time grid, with the peak refined between samples.
#[derive(Debug, Clone, Serialize)]
pub struct ExpCurve {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub peak_time: f64,
    pub peak_norm: f64,
    /// Unit initial state (pencil coordinates) attaining the peak.
    pub worst_x0: Vec<Complex64>,
}

impl ExpCurve {
    /// Largest norm seen, sampled or refined.
    pub fn max(&self) -> f64 {
        self.norms.iter().copied().fold(self.peak_norm, f64::max)
    }

    /// Largest sampled norm on `[0, tau]`.
    pub fn max_until(&self, tau: f64) -> f64 {
        let sampled = self
            .times
            .iter()
            .zip(&self.norms)
            .filter(|(&t, _)| t <= tau)
            .map(|(_, &n)| n)
            .fold(0.0, f64::max);
        if self.peak_time <= tau {
            sampled.max(self.peak_norm)
        } else {
            sampled
        }
    }
}

fn exp_norm(m: &CMatrix, t: f64) -> Result<f64> {
    Ok(linalg::norm2(&expm(&(m * c64(t, 0.0)))?))
}

/// Top right singular vector of `e^{tM}`.
fn top_right_singular_vector(m: &CMatrix, t: f64) -> Result<CVector> {
    let et = expm(&(m * c64(t, 0.0)))?;
    let svd = et.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &s)| if s > acc.1 { (i, s) } else { acc });
    Ok(v_t.row(idx).adjoint())
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("time grid is empty".into()));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("times must be finite, nonnegative and ascending".into()));
    }
    Ok(())
}

/// Norm curve of `e^{tM}` for an arbitrary generator; the worst state is in
/// the generator's own coordinates.
pub fn exp_norm_curve_of(m: &CMatrix, times: &[f64], exec: Execution) -> Result<ExpCurve> {
    check_times(times)?;
    let norms: Vec<f64> = exec
        .map(times.len(), |k| exp_norm(m, times[k]))
        .into_iter()
        .collect::<Result<_>>()?;
    let (kmax, &nmax) = norms
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("time grid is nonempty");
    let (mut peak_time, mut peak_norm) = (times[kmax], nmax);
    if kmax > 0 || times.len() > 1 {
        let a0 = times[kmax.saturating_sub(1)];
        let b0 = times[(kmax + 1).min(times.len() - 1)];
        let (mut a, mut b) = (a0, b0);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let (mut fc, mut fd) = (exp_norm(m, c)?, exp_norm(m, d)?);
        while b - a > 1e-9 * b0.max(1.0) {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = exp_norm(m, c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = exp_norm(m, d)?;
            }
        }
        for (v, t) in [(fc, c), (fd, d)] {
            if v > peak_norm {
                peak_norm = v;
                peak_time = t;
            }
        }
    }
    let v = top_right_singular_vector(m, peak_time)?;
    Ok(ExpCurve { times: times.to_vec(), norms, peak_time, peak_norm, worst_x0: v.iter().copied().collect() })
}

/// `||e^{tM}||` on `times`, the refined peak, and the consistent unit initial
/// state `Q v` that attains it.
pub fn exp_norm_curve(fd: &FiniteDecomposition, times: &[f64], exec: Execution) -> Result<ExpCurve> {
    let mut curve = exp_norm_curve_of(&fd.generator, times, exec)?;
    let y = CVector::from_vec(curve.worst_x0.clone());
    curve.worst_x0 = (&fd.q * y).iter().copied().collect();
    Ok(curve)
}

/// `n + 1` equally spaced samples of `[0, tmax]`.
pub fn time_grid(tmax: f64, n: usize) -> Vec<f64> {
    let n = n.max(1);
    (0..=n).map(|k| tmax * k as f64 / n as f64).collect()
}

/// `kappa(V)` for the eigenvector matrix of an upper-triangular `T`, columns
/// scaled to unit norm; `+inf` when some eigenvector cannot be formed.
pub fn eigenvector_condition(t: &CMatrix) -> f64 {
    let m = t.nrows();
    let mut v = CMatrix::zeros(m, m);
    for k in 0..m {
        let lam = t[(k, k)];
        v[(k, k)] = c64(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = c64(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * v[(j, k)];
            }
            let den = t[(i, i)] - lam;
            if den.norm() == 0.0 {
                return f64::INFINITY;
            }
            v[(i, k)] = -s / den;
        }
        let nrm = v.column(k).norm();
        if !nrm.is_finite() {
            return f64::INFINITY;
        }
        v.column_mut(k).scale_mut(1.0 / nrm);
    }
    condition_estimate(&v)
}

/// Contour-integral bound `L e^{t xmax} / (2 pi eps_eff)` for one level.
#[derive(Debug, Clone, Serialize)]
pub struct ContourBound {
    pub epsilon: f64,
    /// Total length of the closed curves enclosing the pseudospectrum.
    pub length: f64,
    /// Smallest `sigma_min` sampled on the curves (vertices and edge midpoints).
    pub eps_eff: f64,
    /// Largest real part reached by the curves or the pseudospectrum.
    pub xmax: f64,
    /// `L / (2 pi eps_eff)`.
    pub constant: f64,
    pub window: GridSpec,
}

impl ContourBound {
    pub fn value(&self, t: f64) -> f64 {
        self.constant * (t * self.xmax).exp()
    }
}

/// Outcome of a contour bound attempt.
#[derive(Debug, Clone, Serialize)]
pub struct ContourAttempt {
    pub epsilon: f64,
    pub bound: Option<ContourBound>,
    /// Why the bound was refused, if it was.
    pub refused: Option<String>,
}

/// Bounding box of the eps-pseudospectrum from four abscissa searches.
fn pseudospectral_box(op: &ResolventOperator, epsilon: f64) -> Result<(f64, f64, f64, f64)> {
    let rotated = |r: Complex64| -> Result<f64> {
        let o = ResolventOperator::from_triangular(op.matrix() * r)?;
        Ok(pseudospectral_abscissa_with(&o, epsilon, Strategy::Auto)?.value)
    };
    let right = rotated(c64(1.0, 0.0))?;
    let left = -rotated(c64(-1.0, 0.0))?;
    let top = rotated(c64(0.0, -1.0))?;
    let bottom = -rotated(c64(0.0, 1.0))?;
    Ok((left, right, bottom, top))
}

/// Contour bound for one level on an automatically chosen window: the
/// pseudospectrum's bounding box padded by 10% on each side, sampled on a
/// `resolution x resolution` lattice. Refused when a curve is open, no curve
/// is found, or some eigenvalue or inside lattice point is not enclosed.
pub fn contour_bound(op: &ResolventOperator, epsilon: f64, resolution: usize, exec: Execution) -> Result<ContourAttempt> {
    let (l, r, b, t) = pseudospectral_box(op, epsilon)?;
    let pad = 0.1 * (r - l).max(t - b).max(epsilon);
    let window = GridSpec::new(l - pad, r + pad, b - pad, t + pad, resolution, resolution)?;
    let field = op.sublevel_field(&window, epsilon, exec)?;
    let cs = extract_contours(&field, &[epsilon])?;
    let level = &cs.levels[0];
    let refuse = |why: &str| Ok(ContourAttempt { epsilon, bound: None, refused: Some(why.to_string()) });
    if level.is_empty() {
        return refuse("no level curve found on the window");
    }
    if !level.all_closed() {
        return refuse("a level curve leaves the window");
    }
    if op.eigenvalues().iter().any(|&lam| !level.contains(lam)) {
        return refuse("an eigenvalue is not enclosed by the level curves");
    }
    if field.points().any(|(z, s)| s < epsilon && !level.contains(z)) {
        return refuse("an inside lattice point is not enclosed by the level curves");
    }
    let mut probes: Vec<Complex64> = Vec::new();
    for pl in &level.polylines {
        let n = pl.points.len();
        for i in 0..n {
            probes.push(pl.points[i]);
            probes.push((pl.points[i] + pl.points[(i + 1) % n]) * 0.5);
        }
    }
    let sig = exec.map_slice(&probes, |&z| op.sigmin(z));
    let eps_eff = sig.into_iter().fold(f64::INFINITY, f64::min);
    if !(eps_eff > 0.0) {
        return refuse("the level curves pass through the spectrum");
    }
    let alpha_eps = pseudospectral_abscissa_with(op, epsilon, Strategy::Auto)?.value;
    let xmax = probes.iter().map(|z| z.re).fold(alpha_eps, f64::max);
    let constant = level.length / (2.0 * std::f64::consts::PI * eps_eff);
    Ok(ContourAttempt {
        epsilon,
        bound: Some(ContourBound { epsilon, length: level.length, eps_eff, xmax, constant, window }),
        refused: None,
    })
}

/// The four upper bounds on `||e^{tM}||`.
#[derive(Debug, Clone, Serialize)]
pub struct UpperBounds {
    pub omega: f64,
    pub alpha: f64,
    /// Eigenvector condition number; `+inf` when refused.
    pub kappa: f64,
    pub kreiss: f64,
    /// `n - d`.
    pub finite_dim: usize,
    pub contours: Vec<ContourAttempt>,
    pub warnings: Vec<String>,
}

impl UpperBounds {
    /// `e^{t omega}`.
    pub fn coppell(&self, t: f64) -> f64 {
        (t * self.omega).exp()
    }

    /// `kappa(V) e^{t alpha}`.
    pub fn eigenvector(&self, t: f64) -> f64 {
        if self.kappa.is_finite() {
            self.kappa * (t * self.alpha).exp()
        } else {
            f64::INFINITY
        }
    }

    /// `e (n - d) K`.
    pub fn kreiss_bound(&self) -> f64 {
        std::f64::consts::E * self.finite_dim as f64 * self.kreiss
    }

    /// Best available contour bound at time `t` over all accepted levels.
    pub fn contour(&self, t: f64) -> f64 {
        self.contours
            .iter()
            .filter_map(|c| c.bound.as_ref())
            .map(|b| b.value(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest of the four bounds at `t`.
    pub fn min_at(&self, t: f64) -> f64 {
        self.coppell(t)
            .min(self.eigenvector(t))
            .min(self.contour(t))
            .min(self.kreiss_bound())
    }
}

/// Evaluate every upper bound; contour bounds for each requested level.
pub fn upper_bounds(
    fd: &FiniteDecomposition,
    epsilons: &[f64],
    kreiss: &KreissConstant,
    contour_resolution: usize,
    exec: Execution,
) -> Result<UpperBounds> {
    let op = ResolventOperator::from_decomposition(fd);
    let mut warnings = Vec::new();
    let mut kappa = eigenvector_condition(&fd.generator);
    if !(kappa <= EIGENVECTOR_CONDITION_LIMIT) {
        warnings.push(format!(
            "eigenvector matrix is (nearly) defective, condition {kappa:.3e}; eigenvector bound refused"
        ));
        kappa = f64::INFINITY;
    }
    let contours = epsilons
        .iter()
        .map(|&e| contour_bound(&op, e, contour_resolution, exec))
        .collect::<Result<Vec<_>>>()?;
    for c in &contours {
        if let Some(why) = &c.refused {
            warnings.push(format!("contour bound at eps = {:e} refused: {why}", c.epsilon));
        }
    }
    Ok(UpperBounds {
        omega: numerical_abscissa(fd),
        alpha: fd.spectral_abscissa(),
        kappa,
        kreiss: kreiss.value,
        finite_dim: fd.finite_dim(),
        contours,
        warnings,
    })
}

/// Lower bounds for one level.
#[derive(Debug, Clone, Serialize)]
pub struct LowerBound {
    pub epsilon: f64,
    pub alpha_eps: f64,
    /// `alpha_eps / eps`.
    pub ratio: f64,
    /// Timed bound at the curve's peak time (when `alpha_eps > 0`).
    pub timed: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct TransientOptions {
    pub epsilons: Vec<f64>,
    pub times: Vec<f64>,
    pub contour_resolution: usize,
    pub exec: Execution,
}

impl TransientOptions {
    /// `eps in logspace(-6, 0, 13)` and `t in [0, tmax]` with `nt` steps.
    pub fn new(tmax: f64, nt: usize) -> Self {
        TransientOptions {
            epsilons: (0..13).map(|k| 10f64.powf(-6.0 + 0.5 * k as f64)).collect(),
            times: time_grid(tmax, nt),
            contour_resolution: ORACLE_RESOLUTION,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransientReport {
    pub omega: f64,
    pub alpha: f64,
    pub alpha_eps: Vec<(f64, f64)>,
    pub kreiss: KreissConstant,
    pub exp_curve: ExpCurve,
    pub lower_bounds: Vec<LowerBound>,
    pub upper_bounds: UpperBounds,
    /// `(eps, L_eps)` for the accepted contour bounds.
    pub contour_lengths: Vec<(f64, f64)>,
}

pub fn transient_report(fd: &FiniteDecomposition, opts: &TransientOptions) -> Result<TransientReport> {
    let op = ResolventOperator::from_decomposition(fd);
    let alpha_eps: Vec<(f64, f64)> = opts
        .exec
        .map_slice(&opts.epsilons, |&e| pseudospectral_abscissa_with(&op, e, Strategy::Auto).map(|x| (e, x.value)))
        .into_iter()
        .collect::<Result<_>>()?;
    let kreiss = kreiss_constant_of(&op, opts.exec)?;
    let exp_curve = exp_norm_curve(fd, &opts.times, opts.exec)?;
    let lower_bounds = alpha_eps
        .iter()
        .map(|&(e, a)| {
            let timed = if a > 0.0 && exp_curve.peak_time > 0.0 {
                Some((exp_curve.peak_time, timed_lower_bound(a, e, exp_curve.peak_time)?))
            } else {
                None
            };
            Ok(LowerBound { epsilon: e, alpha_eps: a, ratio: a / e, timed })
        })
        .collect::<Result<Vec<_>>>()?;
    let upper_bounds = upper_bounds(fd, &opts.epsilons, &kreiss, opts.contour_resolution, opts.exec)?;
    let contour_lengths = upper_bounds
        .contours
        .iter()
        .filter_map(|c| c.bound.as_ref().map(|b| (c.epsilon, b.length)))
        .collect();
    Ok(TransientReport {
        omega: upper_bounds.omega,
        alpha: upper_bounds.alpha,
        alpha_eps,
        kreiss,
        exp_curve,
        lower_bounds,
        upper_bounds,
        contour_lengths,
    })
}
