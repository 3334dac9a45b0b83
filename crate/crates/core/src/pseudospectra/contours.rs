//! Level curves `sigma_min(z) = eps` by marching squares with linear
//! interpolation along cell edges.
//!
//! Every crossing point belongs to exactly one lattice edge and is computed
//! once, so segments from neighbouring cells share endpoints exactly and are
//! joined by edge identity. Saddle cells are resolved by comparing the cell
//! average with the level.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::Serialize;

use super::{GridSpec, ResolventField};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<Complex64>,
    /// Closed curves repeat no vertex; the last vertex connects to the first.
    pub closed: bool,
}

impl Polyline {
    pub fn length(&self) -> f64 {
        let mut l: f64 = self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
        if self.closed && self.points.len() > 1 {
            l += (self.points[0] - self.points[self.points.len() - 1]).norm();
        }
        l
    }

    /// Even-odd crossing test against the closed polygon.
    pub fn winds_around(&self, z: Complex64) -> bool {
        let pts = &self.points;
        let n = pts.len();
        if n < 3 {
            return false;
        }
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (pts[i], pts[j]);
            if (a.im > z.im) != (b.im > z.im) {
                let x = a.re + (z.im - a.im) * (b.re - a.re) / (b.im - a.im);
                if z.re < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourLevel {
    pub epsilon: f64,
    pub polylines: Vec<Polyline>,
    /// Total arc length of all polylines at this level.
    pub length: f64,
}

impl ContourLevel {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn all_closed(&self) -> bool {
        self.polylines.iter().all(|p| p.closed)
    }

    /// Inside the region bounded by the closed curves (even-odd over all of them).
    pub fn contains(&self, z: Complex64) -> bool {
        self.polylines
            .iter()
            .filter(|p| p.closed)
            .filter(|p| p.winds_around(z))
            .count()
            % 2
            == 1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContourSet {
    pub grid: GridSpec,
    pub levels: Vec<ContourLevel>,
}

impl ContourSet {
    pub fn level(&self, epsilon: f64) -> Option<&ContourLevel> {
        self.levels.iter().find(|l| l.epsilon == epsilon)
    }
}

/// Lattice edge carrying a crossing: horizontal edges join `(ix, iy)` and
/// `(ix + 1, iy)`, vertical ones `(ix, iy)` and `(ix, iy + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Edge {
    H(usize, usize),
    V(usize, usize),
}

fn crossing(field: &ResolventField, edge: Edge, eps: f64) -> Complex64 {
    let g = &field.grid;
    let (a, b) = match edge {
        Edge::H(ix, iy) => ((ix, iy), (ix + 1, iy)),
        Edge::V(ix, iy) => ((ix, iy), (ix, iy + 1)),
    };
    let (va, vb) = (field.get(a.0, a.1), field.get(b.0, b.1));
    let za = g.z(a.0, a.1);
    let zb = g.z(b.0, b.1);
    let t = if vb == va { 0.5 } else { ((eps - va) / (vb - va)).clamp(0.0, 1.0) };
    za + (zb - za) * t
}

fn segments_for_level(field: &ResolventField, eps: f64) -> Vec<(Edge, Edge)> {
    let g = &field.grid;
    let mut segs = Vec::new();
    for iy in 0..g.ny - 1 {
        for ix in 0..g.nx - 1 {
            let v00 = field.get(ix, iy);
            let v10 = field.get(ix + 1, iy);
            let v11 = field.get(ix + 1, iy + 1);
            let v01 = field.get(ix, iy + 1);
            let case = (v00 < eps) as u8
                | ((v10 < eps) as u8) << 1
                | ((v11 < eps) as u8) << 2
                | ((v01 < eps) as u8) << 3;
            let bottom = Edge::H(ix, iy);
            let right = Edge::V(ix + 1, iy);
            let top = Edge::H(ix, iy + 1);
            let left = Edge::V(ix, iy);
            let center_inside = (v00 + v10 + v11 + v01) / 4.0 < eps;
            match case {
                0 | 15 => {}
                1 | 14 => segs.push((left, bottom)),
                2 | 13 => segs.push((bottom, right)),
                3 | 12 => segs.push((left, right)),
                4 | 11 => segs.push((right, top)),
                6 | 9 => segs.push((bottom, top)),
                7 | 8 => segs.push((left, top)),
                5 => {
                    // corners 00 and 11 inside
                    if center_inside {
                        segs.push((left, top));
                        segs.push((bottom, right));
                    } else {
                        segs.push((left, bottom));
                        segs.push((right, top));
                    }
                }
                10 => {
                    // corners 10 and 01 inside
                    if center_inside {
                        segs.push((left, bottom));
                        segs.push((right, top));
                    } else {
                        segs.push((bottom, right));
                        segs.push((left, top));
                    }
                }
                _ => unreachable!(),
            }
        }
    }
    segs
}

/// Chain segments into polylines; every edge has at most two incident segments.
fn join(segs: &[(Edge, Edge)]) -> Vec<(Vec<Edge>, bool)> {
    let mut adj: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (k, &(a, b)) in segs.iter().enumerate() {
        adj.entry(a).or_default().push(k);
        adj.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut out = Vec::new();
    let other = |k: usize, e: Edge| if segs[k].0 == e { segs[k].1 } else { segs[k].0 };

    let walk = |start_seg: usize, start_edge: Edge, used: &mut Vec<bool>| -> Vec<Edge> {
        let mut chain = vec![start_edge];
        let mut seg = start_seg;
        let mut cur = start_edge;
        loop {
            used[seg] = true;
            let next = other(seg, cur);
            chain.push(next);
            cur = next;
            match adj[&cur].iter().copied().find(|&s| !used[s]) {
                Some(s) => seg = s,
                None => break,
            }
        }
        chain
    };

    // open chains start at edges with a single incident segment, in segment order
    for (k, &(a, b)) in segs.iter().enumerate() {
        if used[k] {
            continue;
        }
        let start = if adj[&a].len() == 1 {
            Some(a)
        } else if adj[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(e) = start {
            out.push((walk(k, e, &mut used), false));
        }
    }
    for k in 0..segs.len() {
        if used[k] {
            continue;
        }
        let mut chain = walk(k, segs[k].0, &mut used);
        // the walk returns to its starting edge
        if chain.len() > 1 && chain.first() == chain.last() {
            chain.pop();
        }
        out.push((chain, true));
    }
    out
}

/// Extract `sigma_min = eps` curves for each level. Levels outside the range
/// of the field yield empty curve lists.
pub fn extract_contours(field: &ResolventField, epsilons: &[f64]) -> Result<ContourSet> {
    let mut levels = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("contour level must be positive, got {eps}")));
        }
        let segs = segments_for_level(field, eps);
        let mut polylines = Vec::new();
        for (chain, closed) in join(&segs) {
            let points = chain.iter().map(|&e| crossing(field, e, eps)).collect();
            polylines.push(Polyline { points, closed });
        }
        let length = polylines.iter().map(Polyline::length).sum();
        levels.push(ContourLevel { epsilon: eps, polylines, length });
    }
    Ok(ContourSet { grid: field.grid, levels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Execution;
    use crate::fixtures::jordan_example;
    use crate::linalg::{c64, re, CMatrix};
    use crate::pencil::decompose;
    use crate::pseudospectra::{pseudospectra_grid, FieldKind, ResolventOperator};

    #[test]
    fn disk_around_scalar_eigenvalue() {
        let lam = c64(-0.3, 0.2);
        let op = ResolventOperator::from_triangular(CMatrix::from_element(1, 1, lam)).unwrap();
        let eps = 0.1;
        let grid = GridSpec::new(-0.45, -0.15, 0.05, 0.35, 201, 201).unwrap();
        let f = op.field(&grid, FieldKind::Dae, None, Execution::default()).unwrap();
        let cs = extract_contours(&f, &[eps]).unwrap();
        let lvl = &cs.levels[0];
        assert_eq!(lvl.polylines.len(), 1);
        assert!(lvl.all_closed());
        let want = 2.0 * std::f64::consts::PI * eps;
        assert!((lvl.length - want).abs() < 0.01 * want, "{}", lvl.length);
        for p in &lvl.polylines[0].points {
            assert!(((p - lam).norm() - eps).abs() < 1e-3);
        }
        assert!(lvl.contains(lam));
    }

    #[test]
    fn jordan_example_levels_nest() {
        let fd = decompose(&jordan_example(), re(0.0), None).unwrap();
        let grid = GridSpec::new(-6.05, 4.05, -5.05, 5.05, 161, 161).unwrap();
        let f = pseudospectra_grid(&fd, &grid, Execution::default()).unwrap();
        let cs = extract_contours(&f, &[1.0, 0.1, 0.01]).unwrap();
        for l in &cs.levels {
            assert!(!l.is_empty() && l.all_closed(), "eps {}", l.epsilon);
        }
        // every vertex of an inner curve lies inside the next outer curve
        for w in [(1, 0), (2, 1)] {
            let (inner, outer) = (&cs.levels[w.0], &cs.levels[w.1]);
            for p in inner.polylines.iter().flat_map(|p| p.points.iter()) {
                assert!(outer.contains(*p));
            }
        }
    }

    #[test]
    fn level_above_range_is_empty() {
        let op = ResolventOperator::from_triangular(CMatrix::from_element(1, 1, re(0.0))).unwrap();
        let grid = GridSpec::new(-1.0, 1.0, -1.0, 1.0, 11, 11).unwrap();
        let f = op.field(&grid, FieldKind::Dae, None, Execution::Sequential).unwrap();
        let cs = extract_contours(&f, &[10.0]).unwrap();
        assert!(cs.levels[0].is_empty());
        assert_eq!(cs.levels[0].length, 0.0);
    }

    #[test]
    fn open_contour_at_window_edge() {
        let op = ResolventOperator::from_triangular(CMatrix::from_element(1, 1, re(0.0))).unwrap();
        let grid = GridSpec::new(0.0, 1.0, -1.0, 1.0, 21, 21).unwrap();
        let f = op.field(&grid, FieldKind::Dae, None, Execution::Sequential).unwrap();
        let cs = extract_contours(&f, &[0.5]).unwrap();
        assert!(!cs.levels[0].all_closed());
    }

    #[test]
    fn vertices_interpolate_the_level() {
        let fd = decompose(&jordan_example(), re(0.0), None).unwrap();
        let grid = GridSpec::new(-4.0, 2.0, -3.0, 3.0, 121, 121).unwrap();
        let f = pseudospectra_grid(&fd, &grid, Execution::default()).unwrap();
        let cs = extract_contours(&f, &[0.3]).unwrap();
        let op = ResolventOperator::from_decomposition(&fd);
        let h = grid.dx();
        for p in cs.levels[0].polylines.iter().flat_map(|p| p.points.iter()) {
            // linear interpolation error is O(h) times the local gradient (at most 1)
            assert!((op.sigmin(*p) - 0.3).abs() < h);
        }
    }
}
