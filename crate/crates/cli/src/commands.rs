//! One function per subcommand. Each returns the JSON summary plus any CSV
//! and SVG artifacts; [`Output::emit`] decides what is written where.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde_json::{json, Value};

use dae_pspec::io::{self, field_csv, to_json, Layout, MuPolicy, OutputFormat, RunConfig, SvgPlot};
use dae_pspec::linalg::CMatrix;
use dae_pspec::pencil::{decompose as decompose_pencil, select_shift, FiniteDecomposition, Pencil};
use dae_pspec::projection::{
    self, generate_saddle_pencil, interior_pseudospectra, projected_growth_bound, projected_h_norm, SparsePencil,
};
use dae_pspec::pseudospectra::{
    extract_contours, legacy_grid, numerical_range_of, FieldKind, GridSpec, ResolventField, ResolventOperator,
};
use dae_pspec::transient::{
    self, discrete_report, exp_norm_curve, kreiss_constant_of, pseudospectral_abscissa_with, time_grid, timed_lower_bound,
    transient_report, Strategy, TransientOptions,
};
use dae_pspec::weighted::{h_pseudospectra_schur, InnerProductNorm};
use dae_pspec::{Error, Execution, Result};

/// Lattice size of automatically chosen windows.
const AUTO_GRID_POINTS: usize = 101;

pub struct Output {
    summary: Value,
    csv: Vec<(String, String)>,
    svg: Option<String>,
    /// Files written whenever `--out` is set, independent of `--format`.
    files: Vec<(String, String)>,
}

impl Output {
    fn new(summary: Value) -> Self {
        Output { summary, csv: Vec::new(), svg: None, files: Vec::new() }
    }

    pub fn emit(&self, cfg: &RunConfig) -> Result<()> {
        let text = to_json(&self.summary)?;
        if let Some(dir) = &cfg.out {
            std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
            let write = |name: &str, body: &str| -> Result<()> {
                let path = dir.join(name);
                std::fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
            };
            write("config.toml", &cfg.canonical())?;
            if cfg.wants(OutputFormat::Json) {
                write("summary.json", &text)?;
            }
            if cfg.wants(OutputFormat::Csv) {
                for (name, body) in &self.csv {
                    write(name, body)?;
                }
            }
            if let (true, Some(svg)) = (cfg.wants(OutputFormat::Svg), &self.svg) {
                write("plot.svg", svg)?;
            }
            for (name, body) in &self.files {
                write(name, body)?;
            }
        }
        print!("{text}");
        Ok(())
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required for this subcommand")))
}

fn load_pencil(cfg: &RunConfig) -> Result<Pencil> {
    let a = io::read_dense(required(&cfg.a, "A")?)?;
    let e = io::read_dense(required(&cfg.e, "E")?)?;
    Pencil::new(a, e)
}

fn shift(cfg: &RunConfig, p: &Pencil) -> Result<Complex64> {
    match cfg.mu {
        MuPolicy::Auto => select_shift(p, None),
        MuPolicy::Value(z) => Ok(z),
    }
}

fn weight(cfg: &RunConfig, n: usize) -> Result<Option<InnerProductNorm>> {
    let Some(path) = &cfg.h else { return Ok(None) };
    let h = io::read_dense(path)?;
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::Dimension(format!("H is {}x{}, pencil has dimension {n}", h.nrows(), h.ncols())));
    }
    Ok(Some(InnerProductNorm::new(h)?))
}

fn no_weight(cfg: &RunConfig, command: &str) -> Result<()> {
    if cfg.h.is_some() {
        return Err(Error::InvalidArgument(format!("--H is not supported by '{command}'")));
    }
    Ok(())
}

/// Decomposition plus the operator whose resolvent is analysed: the DAE
/// generator, or its H-norm similarity transform when `--H` is given.
struct Analysis {
    pencil: Pencil,
    fd: FiniteDecomposition,
    generator: CMatrix,
    op: ResolventOperator,
    weighted: bool,
}

fn analyse(cfg: &RunConfig) -> Result<Analysis> {
    let pencil = load_pencil(cfg)?;
    let mu = shift(cfg, &pencil)?;
    let fd = decompose_pencil(&pencil, mu, cfg.d)?;
    let (generator, weighted) = match weight(cfg, pencil.dim())? {
        Some(ipn) => (h_pseudospectra_schur(&fd, &ipn)?.generator, true),
        None => (fd.generator.clone(), false),
    };
    let op = ResolventOperator::from_matrix(&generator)?;
    Ok(Analysis { pencil, fd, generator, op, weighted })
}

fn pencil_summary(a: &Analysis) -> Value {
    json!({
        "n": a.fd.dim(),
        "d": a.fd.d,
        "index": a.fd.index,
        "mu": a.fd.mu,
        "finite_eigenvalues": a.fd.finite_eigenvalues(),
        "spectral_abscissa": a.fd.spectral_abscissa(),
        "reconstruction_residual": a.fd.reconstruction_residual,
        "threshold": a.fd.threshold,
        "weighted": a.weighted,
        "warnings": a.fd.warnings,
    })
}

/// Box around the numerical range, padded so that every requested level
/// set (contained in `W + eps` disk) fits.
fn auto_grid(a: &Analysis, epsilons: &[f64]) -> Result<GridSpec> {
    let nr = numerical_range_of(&a.generator, 64)?;
    let pts = nr.points.iter().chain(a.op.eigenvalues().iter()).copied().collect::<Vec<_>>();
    let (mut l, mut r, mut b, mut t) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in pts {
        l = l.min(z.re);
        r = r.max(z.re);
        b = b.min(z.im);
        t = t.max(z.im);
    }
    let emax = epsilons.iter().copied().fold(0.0, f64::max).min(10.0);
    let pad = emax + 0.1 * (r - l).max(t - b).max(1.0);
    GridSpec::new(l - pad, r + pad, b - pad, t + pad, AUTO_GRID_POINTS, AUTO_GRID_POINTS)
}

fn window(cfg: &RunConfig, a: &Analysis) -> Result<GridSpec> {
    match cfg.grid {
        Some(g) => Ok(g),
        None => auto_grid(a, &cfg.eps),
    }
}

/// Largest real part among grid points inside the level set, or `None`
/// when no point is inside.
fn grid_abscissa(field: &ResolventField, epsilon: f64) -> Option<f64> {
    field.points().filter(|&(_, s)| s < epsilon).map(|(z, _)| z.re).reduce(f64::max)
}

fn abscissa_table(op: &ResolventOperator, epsilons: &[f64], exec: Execution) -> Result<Vec<Value>> {
    exec.map_slice(epsilons, |&e| {
        pseudospectral_abscissa_with(op, e, Strategy::Auto).map(|x| {
            json!({ "epsilon": e, "alpha_eps": x.value, "point": x.point, "method": x.method, "ratio": x.value / e })
        })
    })
    .into_iter()
    .collect()
}

pub fn decompose(cfg: &RunConfig) -> Result<Output> {
    no_weight(cfg, "decompose")?;
    let a = analyse(cfg)?;
    Ok(Output::new(json!({ "command": "decompose", "pencil": pencil_summary(&a) })))
}

pub fn grid(cfg: &RunConfig, kind: FieldKind, exec: Execution) -> Result<Output> {
    let a = analyse(cfg)?;
    let g = window(cfg, &a)?;
    let field = match kind {
        FieldKind::Dae => a.op.field(&g, FieldKind::Dae, Some(a.fd.mu), exec)?,
        _ if a.weighted => return Err(Error::InvalidArgument("--H applies to the dae field only".into())),
        _ => legacy_grid(&a.pencil, &g, kind, exec)?,
    };
    let mut summary = json!({
        "command": "grid",
        "kind": kind,
        "grid": g,
        "sigmin_min": field.min(),
        "sigmin_max": field.max(),
        "pencil": pencil_summary(&a),
    });
    if kind == FieldKind::Dae {
        let mut table = abscissa_table(&a.op, &cfg.eps, exec)?;
        for row in &mut table {
            let e = row["epsilon"].as_f64().expect("epsilon is a number");
            row["alpha_eps_grid"] = json!(grid_abscissa(&field, e));
        }
        summary["alpha_eps"] = Value::Array(table);
        summary["cell_width"] = json!(g.dx());
    }
    let mut out = Output::new(summary);
    out.csv.push(("field.csv".into(), field_csv(&field)));
    let eps: Vec<f64> = cfg.eps.iter().copied().filter(|&e| e >= field.min() && e <= field.max()).collect();
    let mut plot = SvgPlot::new(g);
    if !eps.is_empty() {
        plot.contours(&extract_contours(&field, &eps)?);
    }
    out.svg = Some(plot.eigenvalues(&a.op.eigenvalues()).render());
    Ok(out)
}

pub fn contours(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    let a = analyse(cfg)?;
    let g = window(cfg, &a)?;
    let field = a.op.field(&g, FieldKind::Dae, Some(a.fd.mu), exec)?;
    let set = extract_contours(&field, &cfg.eps)?;
    let nr = numerical_range_of(&a.generator, 256)?;
    let levels: Vec<Value> = set
        .levels
        .iter()
        .map(|l| {
            json!({
                "epsilon": l.epsilon,
                "curves": l.polylines.len(),
                "all_closed": l.all_closed(),
                "length": l.length,
                "polylines": l.polylines,
            })
        })
        .collect();
    let mut out = Output::new(json!({
        "command": "contours",
        "grid": g,
        "levels": levels,
        "omega": nr.omega,
        "pencil": pencil_summary(&a),
    }));
    out.csv.push(("field.csv".into(), field_csv(&field)));
    out.svg = Some(SvgPlot::new(g).contours(&set).numerical_range(&nr).eigenvalues(&a.op.eigenvalues()).render());
    Ok(out)
}

pub fn numerical_range(cfg: &RunConfig, directions: usize) -> Result<Output> {
    let a = analyse(cfg)?;
    let nr = numerical_range_of(&a.generator, directions)?;
    let mut csv = String::from("theta,re,im,support\n");
    for i in 0..nr.points.len() {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            io::fmt_f64(nr.theta[i]),
            io::fmt_f64(nr.points[i].re),
            io::fmt_f64(nr.points[i].im),
            io::fmt_f64(nr.support[i])
        ));
    }
    let g = window(cfg, &a)?;
    let mut out = Output::new(json!({
        "command": "nr",
        "omega": nr.omega,
        "numerical_abscissa": transient::numerical_abscissa_of(&a.generator),
        "convexity_defect": nr.convexity_defect(),
        "boundary": nr.points,
        "pencil": pencil_summary(&a),
    }));
    out.csv.push(("numerical_range.csv".into(), csv));
    out.svg = Some(SvgPlot::new(g).numerical_range(&nr).eigenvalues(&a.op.eigenvalues()).render());
    Ok(out)
}

pub fn abscissa(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    let a = analyse(cfg)?;
    let table = abscissa_table(&a.op, &cfg.eps, exec)?;
    let mut csv = String::from("epsilon,alpha_eps\n");
    for row in &table {
        csv.push_str(&format!(
            "{},{}\n",
            io::fmt_f64(row["epsilon"].as_f64().unwrap_or(f64::NAN)),
            io::fmt_f64(row["alpha_eps"].as_f64().unwrap_or(f64::NAN))
        ));
    }
    let mut out = Output::new(json!({
        "command": "abscissa",
        "alpha": a.fd.spectral_abscissa(),
        "omega": transient::numerical_abscissa_of(&a.generator),
        "alpha_eps": table,
        "pencil": pencil_summary(&a),
    }));
    out.csv.push(("abscissa.csv".into(), csv));
    Ok(out)
}

pub fn kreiss(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    let a = analyse(cfg)?;
    let k = kreiss_constant_of(&a.op, exec)?;
    let mut csv = String::from("epsilon,ratio\n");
    for &(e, r) in &k.samples {
        csv.push_str(&format!("{},{}\n", io::fmt_f64(e), io::fmt_f64(r)));
    }
    let mut out = Output::new(json!({
        "command": "kreiss",
        "kreiss": k.value,
        "eps_star": k.eps_star,
        "unbounded": k.value.is_infinite(),
        "samples": k.samples,
        "pencil": pencil_summary(&a),
    }));
    out.csv.push(("kreiss.csv".into(), csv));
    Ok(out)
}

pub fn bounds(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    no_weight(cfg, "bounds")?;
    let a = analyse(cfg)?;
    let mut opts = TransientOptions::new(cfg.tmax, cfg.nt);
    opts.epsilons = cfg.eps.clone();
    opts.exec = exec;
    let r = transient_report(&a.fd, &opts)?;
    let ub = &r.upper_bounds;
    let mut csv = String::from("t,norm,coppell,eigenvector,contour,kreiss,min_upper\n");
    for (&t, &v) in r.exp_curve.times.iter().zip(&r.exp_curve.norms) {
        let row = [t, v, ub.coppell(t), ub.eigenvector(t), ub.contour(t), ub.kreiss_bound(), ub.min_at(t)];
        csv.push_str(&row.map(io::fmt_f64).join(","));
        csv.push('\n');
    }
    let max_lower = r.lower_bounds.iter().map(|l| l.ratio).fold(f64::NEG_INFINITY, f64::max);
    let t_peak = r.exp_curve.peak_time;
    let mut out = Output::new(json!({
        "command": "bounds",
        "omega": r.omega,
        "alpha": r.alpha,
        "kreiss": r.kreiss.value,
        "peak_norm": r.exp_curve.peak_norm,
        "peak_time": t_peak,
        "best_lower_bound": max_lower,
        "best_upper_bound_at_peak": ub.min_at(t_peak),
        "report": r,
        "pencil": pencil_summary(&a),
    }));
    out.csv.push(("curve.csv".into(), csv));
    Ok(out)
}

pub fn transient(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    no_weight(cfg, "transient")?;
    let a = analyse(cfg)?;
    let curve = exp_norm_curve(&a.fd, &time_grid(cfg.tmax, cfg.nt), exec)?;
    let kreiss = kreiss_constant_of(&a.op, exec)?;
    let mut lower = Vec::new();
    for &e in &cfg.eps {
        let alpha_eps = pseudospectral_abscissa_with(&a.op, e, Strategy::Auto)?.value;
        let timed = if alpha_eps > 0.0 && curve.peak_time > 0.0 {
            Some(timed_lower_bound(alpha_eps, e, curve.peak_time)?)
        } else {
            None
        };
        lower.push(json!({ "epsilon": e, "alpha_eps": alpha_eps, "ratio": alpha_eps / e, "timed_at_peak": timed }));
    }
    let mut csv = String::from("t,norm\n");
    for (&t, &v) in curve.times.iter().zip(&curve.norms) {
        csv.push_str(&format!("{},{}\n", io::fmt_f64(t), io::fmt_f64(v)));
    }
    let mut out = Output::new(json!({
        "command": "transient",
        "peak_norm": curve.peak_norm,
        "peak_time": curve.peak_time,
        "worst_x0": curve.worst_x0,
        "kreiss": kreiss.value,
        "lower_bounds": lower,
        "pencil": pencil_summary(&a),
    }));
    out.csv.push(("curve.csv".into(), csv));
    Ok(out)
}

pub fn discrete(cfg: &RunConfig, steps: usize, exec: Execution) -> Result<Output> {
    no_weight(cfg, "discrete")?;
    let a = analyse(cfg)?;
    let r = discrete_report(&a.fd, &cfg.eps, steps, exec)?;
    let mut csv = String::from("k,norm\n");
    for &(k, v) in &r.power_curve {
        csv.push_str(&format!("{k},{}\n", io::fmt_f64(v)));
    }
    let mut out = Output::new(json!({
        "command": "discrete",
        "spectral_radius": r.spectral_radius,
        "rho_eps": r.rho_eps,
        "kreiss_unit_disk": r.kreiss_extension.value,
        "report": r,
        "pencil": pencil_summary(&a),
    }));
    out.csv.push(("powers.csv".into(), csv));
    Ok(out)
}

pub fn compare(cfg: &RunConfig, transforms: &[PathBuf], exec: Execution) -> Result<Output> {
    no_weight(cfg, "compare")?;
    let a = analyse(cfg)?;
    let g = window(cfg, &a)?;
    let dae = a.op.field(&g, FieldKind::Dae, Some(a.fd.mu), exec)?;
    let gen1 = legacy_grid(&a.pencil, &g, FieldKind::Gen1, exec)?;
    let ruhe = match legacy_grid(&a.pencil, &g, FieldKind::Ruhe, exec) {
        Ok(f) => Some(f),
        Err(Error::SingularE) => None,
        Err(e) => return Err(e),
    };
    let mut out = Output::new(Value::Null);
    out.csv.push(("field_dae.csv".into(), field_csv(&dae)));
    out.csv.push(("field_gen1.csv".into(), field_csv(&gen1)));
    let mut rows = Vec::new();
    for (i, path) in transforms.iter().enumerate() {
        let t = io::read_dense(path)?;
        let tp = a.pencil.premultiply(&t)?;
        let fd = decompose_pencil(&tp, a.fd.mu, cfg.d)?;
        let dae_t = ResolventOperator::from_decomposition(&fd).field(&g, FieldKind::Dae, Some(fd.mu), exec)?;
        let gen1_t = legacy_grid(&tp, &g, FieldKind::Gen1, exec)?;
        rows.push(json!({
            "transform": path,
            "dae_max_relative_difference": dae.max_relative_difference(&dae_t)?,
            "gen1_max_ratio": gen1.max_ratio(&gen1_t)?,
        }));
        out.csv.push((format!("field_gen1_t{}.csv", i + 1), field_csv(&gen1_t)));
    }
    out.summary = json!({
        "command": "compare",
        "grid": g,
        "dae_vs_ruhe_max_relative_difference": ruhe.as_ref().map(|r| dae.max_relative_difference(r)).transpose()?,
        "transforms": rows,
        "pencil": pencil_summary(&a),
    });
    let eps: Vec<f64> = cfg.eps.iter().copied().filter(|&e| e >= dae.min() && e <= dae.max()).collect();
    let mut plot = SvgPlot::new(g);
    if !eps.is_empty() {
        plot.contours(&extract_contours(&dae, &eps)?);
    }
    out.svg = Some(plot.eigenvalues(&a.op.eigenvalues()).render());
    Ok(out)
}

pub fn project(cfg: &RunConfig, exec: Execution) -> Result<Output> {
    let a = io::read_matrix(required(&cfg.a, "A")?)?;
    let e = io::read_matrix(required(&cfg.e, "E")?)?;
    let sp = SparsePencil::new(a, e)?;
    let k = cfg.k.ok_or_else(|| Error::InvalidArgument("--k is required for 'project'".into()))?;
    let mu = match cfg.mu {
        MuPolicy::Value(z) => z,
        MuPolicy::Auto => select_shift(&sp.to_dense()?, None)?,
    };
    let mut pr = projection::project(&sp, mu, k)?;
    if let Some(ipn) = weight(cfg, sp.dim())? {
        pr = projected_h_norm(&pr, &ipn)?;
    }
    let eigenvalues: Vec<Complex64> = pr.ritz_values.iter().map(|t| t.inv() + mu).collect();
    let growth = cfg
        .eps
        .iter()
        .map(|&e| projected_growth_bound(&pr, e).map(|v| json!({ "epsilon": e, "ratio": v })))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Output::new(json!({
        "command": "project",
        "n": sp.dim(),
        "k": k,
        "mu": mu,
        "eigenvalues": eigenvalues,
        "projection": pr,
        "growth_lower_bounds": growth,
    }));
    if let Some(g) = cfg.grid {
        let field = interior_pseudospectra(&pr, &g, exec)?;
        out.csv.push(("field.csv".into(), field_csv(&field)));
        out.svg = Some(SvgPlot::new(g).eigenvalues(&eigenvalues).render());
    }
    Ok(out)
}

pub fn gen_saddle(cfg: &RunConfig, nv: usize, np: usize, density: f64) -> Result<Output> {
    let dir = required(&cfg.out, "out")?;
    let sp = generate_saddle_pencil(nv, np, cfg.seed, density)?;
    let mut out = Output::new(json!({
        "command": "gen-saddle",
        "n_v": nv,
        "n_p": np,
        "n": sp.dim(),
        "seed": cfg.seed,
        "density": density,
        "nnz_a": sp.a.nnz(),
        "nnz_e": sp.e.nnz(),
        "expected_d": 2 * np,
        "expected_index": 2,
        "files": [dir.join("A.mtx"), dir.join("E.mtx")],
    }));
    out.files.push(("A.mtx".into(), io::write_matrix_market(&sp.a, Layout::Coordinate)));
    out.files.push(("E.mtx".into(), io::write_matrix_market(&sp.e, Layout::Coordinate)));
    Ok(out)
}
