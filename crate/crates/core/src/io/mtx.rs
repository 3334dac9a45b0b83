//! Matrix Market reader and writer.
//!
//! Accepts `array` and `coordinate` layouts with `real`, `integer` or
//! `complex` values and `general`, `symmetric`, `skew-symmetric` or
//! `hermitian` storage. Symmetric storage lists the lower triangle only and
//! is expanded on read; coordinate duplicates are summed. `pattern` files
//! carry no values and are rejected.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{c64, CMatrix};
use crate::projection::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

#[derive(Debug, Clone, Copy)]
struct Header {
    layout: Layout,
    field: Field,
    symmetry: Symmetry,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn parse_header(line: &str) -> Result<Header> {
    let words: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.first().map(String::as_str) != Some("%%matrixmarket") {
        return Err(parse_err(1, "missing %%MatrixMarket banner"));
    }
    if words.len() != 5 {
        return Err(parse_err(1, format!("banner needs 4 qualifiers, found {}", words.len().saturating_sub(1))));
    }
    if words[1] != "matrix" {
        return Err(parse_err(1, format!("unsupported object '{}'", words[1])));
    }
    let layout = match words[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(parse_err(1, format!("unknown format '{other}'"))),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "complex" => Field::Complex,
        "pattern" => return Err(parse_err(1, "pattern matrices carry no values and are not supported")),
        other => return Err(parse_err(1, format!("unknown field '{other}'"))),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(parse_err(1, format!("unknown symmetry '{other}'"))),
    };
    if symmetry == Symmetry::Hermitian && field != Field::Complex {
        return Err(parse_err(1, "hermitian storage requires the complex field"));
    }
    Ok(Header { layout, field, symmetry })
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("{what} '{tok}' is not a nonnegative integer")))
}

fn parse_value(toks: &[&str], field: Field, line: usize) -> Result<Complex64> {
    let num = |t: &str| -> Result<f64> {
        let v = match field {
            Field::Integer => t
                .parse::<i64>()
                .map(|v| v as f64)
                .map_err(|_| parse_err(line, format!("'{t}' is not an integer")))?,
            _ => t.parse::<f64>().map_err(|_| parse_err(line, format!("'{t}' is not a number")))?,
        };
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value '{t}'")));
        }
        Ok(v)
    };
    let want = if field == Field::Complex { 2 } else { 1 };
    if toks.len() != want {
        return Err(parse_err(line, format!("expected {want} value token(s), found {}", toks.len())));
    }
    Ok(match field {
        Field::Complex => c64(num(toks[0])?, num(toks[1])?),
        _ => c64(num(toks[0])?, 0.0),
    })
}

/// Place `v` at `(i, j)` and its mirror image as the storage dictates.
fn push_expanded(out: &mut Vec<(usize, usize, Complex64)>, sym: Symmetry, i: usize, j: usize, v: Complex64, line: usize) -> Result<()> {
    if sym != Symmetry::General && j > i {
        return Err(parse_err(line, format!("entry ({}, {}) lies above the diagonal of a {sym:?} file", i + 1, j + 1)));
    }
    match sym {
        Symmetry::SkewSymmetric if i == j => {
            return Err(parse_err(line, "skew-symmetric files must not store diagonal entries"));
        }
        Symmetry::Hermitian if i == j && v.im != 0.0 => {
            return Err(parse_err(line, format!("hermitian diagonal entry ({}, {}) is not real", i + 1, j + 1)));
        }
        _ => {}
    }
    out.push((i, j, v));
    if i != j {
        match sym {
            Symmetry::General => {}
            Symmetry::Symmetric => out.push((j, i, v)),
            Symmetry::SkewSymmetric => out.push((j, i, -v)),
            Symmetry::Hermitian => out.push((j, i, v.conj())),
        }
    }
    Ok(())
}

/// Parse Matrix Market text. Errors carry 1-based line numbers.
pub fn parse_matrix_market(text: &str) -> Result<SparseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = match lines.next() {
        Some((_, l)) => parse_header(l)?,
        None => return Err(parse_err(1, "empty file")),
    };
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| parse_err(text.lines().count().max(1), "missing size line"))?;
    let size_toks: Vec<&str> = size.split_whitespace().collect();
    let expected = if header.layout == Layout::Coordinate { 3 } else { 2 };
    if size_toks.len() != expected {
        return Err(parse_err(size_line, format!("size line needs {expected} integers, found {}", size_toks.len())));
    }
    let rows = parse_usize(size_toks[0], size_line, "row count")?;
    let cols = parse_usize(size_toks[1], size_line, "column count")?;
    if header.symmetry != Symmetry::General && rows != cols {
        return Err(parse_err(size_line, format!("{:?} storage requires a square matrix, got {rows}x{cols}", header.symmetry)));
    }
    let mut triplets = Vec::new();
    let mut last_line = size_line;
    match header.layout {
        Layout::Coordinate => {
            let nnz = parse_usize(size_toks[2], size_line, "entry count")?;
            let mut seen = 0;
            for (ln, l) in body {
                last_line = ln;
                if seen == nnz {
                    return Err(parse_err(ln, format!("more entries than the declared {nnz}")));
                }
                let toks: Vec<&str> = l.split_whitespace().collect();
                if toks.len() < 3 {
                    return Err(parse_err(ln, "coordinate entries need row, column and value"));
                }
                let i = parse_usize(toks[0], ln, "row index")?;
                let j = parse_usize(toks[1], ln, "column index")?;
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(ln, format!("index ({i}, {j}) outside a {rows}x{cols} matrix (indices are 1-based)")));
                }
                let v = parse_value(&toks[2..], header.field, ln)?;
                push_expanded(&mut triplets, header.symmetry, i - 1, j - 1, v, ln)?;
                seen += 1;
            }
            if seen != nnz {
                return Err(parse_err(last_line, format!("declared {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            // column-major; symmetric storage keeps the lower triangle
            let slots: Vec<(usize, usize)> = (0..cols)
                .flat_map(|j| (0..rows).map(move |i| (i, j)))
                .filter(|&(i, j)| match header.symmetry {
                    Symmetry::General => true,
                    Symmetry::SkewSymmetric => i > j,
                    _ => i >= j,
                })
                .collect();
            let mut slot = slots.iter();
            for (ln, l) in body {
                last_line = ln;
                let toks: Vec<&str> = l.split_whitespace().collect();
                let &(i, j) = slot
                    .next()
                    .ok_or_else(|| parse_err(ln, format!("more values than the {} expected", slots.len())))?;
                let v = parse_value(&toks, header.field, ln)?;
                push_expanded(&mut triplets, header.symmetry, i, j, v, ln)?;
            }
            let missing = slot.count();
            if missing > 0 {
                return Err(parse_err(last_line, format!("{missing} value(s) missing of the {} expected", slots.len())));
            }
        }
    }
    SparseMatrix::from_triplets(rows, cols, triplets)
}

pub fn read_matrix(path: &Path) -> Result<SparseMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix_market(&text).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse { line, message: format!("{}: {message}", path.display()) },
        other => other,
    })
}

pub fn read_dense(path: &Path) -> Result<CMatrix> {
    Ok(read_matrix(path)?.to_dense())
}

/// `{:.16e}`: 17 significant digits, enough to round-trip every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Render in general storage; the field is `real` when every entry has a
/// zero imaginary part.
pub fn write_matrix_market(m: &SparseMatrix, layout: Layout) -> String {
    let real = m.entries().iter().all(|e| e.2.im == 0.0);
    let field = if real { "real" } else { "complex" };
    let value = |v: Complex64| {
        if real {
            fmt_f64(v.re)
        } else {
            format!("{} {}", fmt_f64(v.re), fmt_f64(v.im))
        }
    };
    let mut s = String::new();
    match layout {
        Layout::Coordinate => {
            let _ = writeln!(s, "%%MatrixMarket matrix coordinate {field} general");
            let _ = writeln!(s, "{} {} {}", m.rows(), m.cols(), m.nnz());
            for &(i, j, v) in m.entries() {
                let _ = writeln!(s, "{} {} {}", i + 1, j + 1, value(v));
            }
        }
        Layout::Array => {
            let d = m.to_dense();
            let _ = writeln!(s, "%%MatrixMarket matrix array {field} general");
            let _ = writeln!(s, "{} {}", m.rows(), m.cols());
            for j in 0..m.cols() {
                for i in 0..m.rows() {
                    let _ = writeln!(s, "{}", value(d[(i, j)]));
                }
            }
        }
    }
    s
}

pub fn write_dense(path: &Path, m: &CMatrix, layout: Layout) -> Result<()> {
    std::fs::write(path, write_matrix_market(&SparseMatrix::from_dense(m), layout))?;
    Ok(())
}
