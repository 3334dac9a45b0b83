//! Machine-readable outputs: CSV field dumps, JSON documents and minimal
//! SVG plots.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::Serialize;

use super::mtx::fmt_f64;
use crate::error::{Error, Result};
use crate::pseudospectra::{ContourSet, GridSpec, NumericalRangeBoundary, ResolventField};

/// `re,im,sigmin` rows, real part varying fastest.
pub fn field_csv(field: &ResolventField) -> String {
    let mut s = String::from("re,im,sigmin\n");
    for (z, v) in field.points() {
        let _ = writeln!(s, "{},{},{}", fmt_f64(z.re), fmt_f64(z.im), fmt_f64(v));
    }
    s
}

/// Inverse of [`field_csv`]: `(re, im, sigmin)` rows.
pub fn parse_field_csv(text: &str) -> Result<Vec<(f64, f64, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "re,im,sigmin")) => {}
        _ => return Err(Error::Parse { line: 1, message: "expected header 're,im,sigmin'".into() }),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { line: i + 1, message: e.to_string() })?;
            match v[..] {
                [re, im, s] => Ok((re, im, s)),
                _ => Err(Error::Parse { line: i + 1, message: format!("expected 3 columns, found {}", v.len()) }),
            }
        })
        .collect()
}

/// Pretty JSON with a trailing newline. Non-finite floats are written as
/// `null` (for example an unbounded Kreiss constant).
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Error document written on failure.
#[derive(Debug, Serialize)]
pub struct ErrorDocument {
    pub error: ErrorBody,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
    pub exit_code: i32,
}

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl ErrorDocument {
    pub fn new(e: &Error) -> Self {
        let exit_code = if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERICAL };
        ErrorDocument { error: ErrorBody { kind: e.kind(), message: e.to_string(), exit_code } }
    }
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

/// Plot of one window of the complex plane.
pub struct SvgPlot {
    window: GridSpec,
    width: f64,
    height: f64,
    body: String,
}

impl SvgPlot {
    pub fn new(window: GridSpec) -> Self {
        let aspect = (window.im_max - window.im_min) / (window.re_max - window.re_min);
        let width = 600.0;
        let height = (width * aspect).clamp(200.0, 1200.0);
        let mut plot = SvgPlot { window, width, height, body: String::new() };
        plot.axes();
        plot
    }

    fn px(&self, z: Complex64) -> (f64, f64) {
        let w = &self.window;
        (
            (z.re - w.re_min) / (w.re_max - w.re_min) * self.width,
            (w.im_max - z.im) / (w.im_max - w.im_min) * self.height,
        )
    }

    fn axes(&mut self) {
        let w = self.window;
        let _ = writeln!(
            self.body,
            r##"<rect x="0" y="0" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"##,
            self.width, self.height
        );
        if w.re_min < 0.0 && w.re_max > 0.0 {
            let (x, _) = self.px(Complex64::new(0.0, 0.0));
            let _ = writeln!(self.body, r##"<line x1="{x:.2}" y1="0" x2="{x:.2}" y2="{:.2}" stroke="#999"/>"##, self.height);
        }
        if w.im_min < 0.0 && w.im_max > 0.0 {
            let (_, y) = self.px(Complex64::new(0.0, 0.0));
            let _ = writeln!(self.body, r##"<line x1="0" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#999"/>"##, self.width);
        }
        let _ = writeln!(
            self.body,
            r##"<text x="2" y="{:.2}" font-size="10">{:.3}</text><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{:.3}</text>"##,
            self.height - 2.0,
            w.re_min,
            self.width - 2.0,
            self.height - 2.0,
            w.re_max
        );
        let _ = writeln!(
            self.body,
            r##"<text x="2" y="10" font-size="10">{:.3}i</text><text x="2" y="{:.2}" font-size="10">{:.3}i</text>"##,
            w.im_max,
            self.height - 14.0,
            w.im_min
        );
    }

    fn path(&self, pts: &[Complex64], closed: bool) -> String {
        let mut d = String::new();
        for (i, z) in pts.iter().enumerate() {
            let (x, y) = self.px(*z);
            let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
        }
        if closed {
            d.push('Z');
        }
        d
    }

    /// Crosses at the eigenvalues.
    pub fn eigenvalues(&mut self, ev: &[Complex64]) -> &mut Self {
        for z in ev {
            let (x, y) = self.px(*z);
            let _ = writeln!(
                self.body,
                r##"<path d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" stroke="black" stroke-width="1.5"/>"##,
                x - 4.0,
                y - 4.0,
                x + 4.0,
                y + 4.0,
                x - 4.0,
                y + 4.0,
                x + 4.0,
                y - 4.0
            );
        }
        self
    }

    /// Level curves, one colour per level, labelled with `log10(eps)`.
    pub fn contours(&mut self, set: &ContourSet) -> &mut Self {
        for (k, level) in set.levels.iter().enumerate() {
            let colour = PALETTE[k % PALETTE.len()];
            for pl in &level.polylines {
                let d = self.path(&pl.points, pl.closed);
                let _ = writeln!(self.body, r##"<path d="{d}" fill="none" stroke="{colour}"/>"##);
            }
            if let Some(first) = level.polylines.iter().max_by(|a, b| a.points.len().cmp(&b.points.len())) {
                if let Some(z) = first.points.first() {
                    let (x, y) = self.px(*z);
                    let _ = writeln!(
                        self.body,
                        r##"<text x="{x:.2}" y="{y:.2}" font-size="10" fill="{colour}">{:.2}</text>"##,
                        level.epsilon.log10()
                    );
                }
            }
        }
        self
    }

    /// Dashed boundary of the numerical range.
    pub fn numerical_range(&mut self, nr: &NumericalRangeBoundary) -> &mut Self {
        let d = self.path(&nr.points, true);
        let _ = writeln!(self.body, r##"<path d="{d}" fill="none" stroke="black" stroke-dasharray="5,4"/>"##);
        self
    }

    pub fn render(&self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::fixtures::jordan_example;
    use crate::linalg::re;
    use crate::pencil::decompose;
    use crate::pseudospectra::{extract_contours, numerical_range, pseudospectra_grid};

    fn field() -> (crate::pencil::FiniteDecomposition, ResolventField) {
        let fd = decompose(&jordan_example(), re(0.0), None).unwrap();
        let g = GridSpec::new(-3.0, 1.0, -2.0, 2.0, 21, 17).unwrap();
        let f = pseudospectra_grid(&fd, &g, Execution::default()).unwrap();
        (fd, f)
    }

    #[test]
    fn csv_round_trips_bitwise() {
        let (_, f) = field();
        let text = field_csv(&f);
        assert!(text.starts_with("re,im,sigmin\n"));
        let rows = parse_field_csv(&text).unwrap();
        assert_eq!(rows.len(), f.grid.len());
        for ((z, s), (re, im, v)) in f.points().zip(&rows) {
            assert_eq!((z.re, z.im, s), (*re, *im, *v));
        }
    }

    #[test]
    fn csv_rejects_bad_rows() {
        assert!(parse_field_csv("x,y\n").is_err());
        assert!(matches!(parse_field_csv("re,im,sigmin\n1,2\n"), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn error_document_exit_codes() {
        let d = ErrorDocument::new(&Error::Parse { line: 3, message: "bad".into() });
        assert_eq!((d.error.exit_code, d.error.kind), (EXIT_INPUT, "parse"));
        let d = ErrorDocument::new(&Error::NoConvergence { index: 0, iterations: 9 });
        assert_eq!(d.error.exit_code, EXIT_NUMERICAL);
        let v: serde_json::Value = serde_json::from_str(&to_json(&d).unwrap()).unwrap();
        assert_eq!(v["error"]["exit_code"], 3);
    }

    #[test]
    fn svg_contains_every_layer() {
        let (fd, f) = field();
        let set = extract_contours(&f, &[0.1, 0.5]).unwrap();
        let nr = numerical_range(&fd, 64).unwrap();
        let svg = SvgPlot::new(f.grid).eigenvalues(&fd.finite_eigenvalues()).contours(&set).numerical_range(&nr).render();
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains(">-1.00<"), "label of log10(0.1)");
        assert_eq!(svg.matches("<svg").count(), 1);
    }
}
