//! Periodic square grids and zero-level-set geometry: marching squares,
//! circle fits and Hausdorff distances.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalar field on an `n x n` periodic grid of side `box_len`.
/// Node `(i, j)` sits at `(i h, j h)` and is stored at `j * n + i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridField {
    n: usize,
    box_len: f64,
    time: f64,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(n: usize, box_len: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 4 nodes per side, got {n}"
            )));
        }
        if !(box_len > 0.0 && box_len.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "box side must be positive, got {box_len}"
            )));
        }
        Ok(Self {
            n,
            box_len,
            time: 0.0,
            values: vec![0.0; n * n],
        })
    }

    /// Sample `f(x, y)` at the nodes.
    pub fn from_fn<F: Fn(f64, f64) -> f64 + Sync>(n: usize, box_len: f64, f: F) -> Result<Self> {
        let mut g = Self::zeros(n, box_len)?;
        let h = g.step();
        g.values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(i as f64 * h, j as f64 * h);
            }
        });
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> f64 {
        self.box_len
    }

    pub fn step(&self) -> f64 {
        self.box_len / self.n as f64
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Periodic lookup.
    pub fn at(&self, i: isize, j: isize) -> f64 {
        let n = self.n as isize;
        self.values[(j.rem_euclid(n) * n + i.rem_euclid(n)) as usize]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `(1 - w) self + w other`, on the same grid.
    pub fn lerp(&self, other: &GridField, w: f64) -> Result<GridField> {
        if self.n != other.n || self.box_len != other.box_len {
            return Err(Error::InvalidArgument(
                "fields live on different grids".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + w * (b - a))
            .collect();
        Ok(GridField {
            n: self.n,
            box_len: self.box_len,
            time: self.time + w * (other.time - self.time),
            values,
        })
    }

    /// Zero level set, oriented with positive values on the left.
    pub fn zero_set(&self) -> Interface {
        marching_squares(self)
    }
}

/// Snapshots of a run; each field carries its time stamp.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunHistory {
    pub snapshots: Vec<GridField>,
}

impl RunHistory {
    pub fn interfaces(&self) -> Vec<(f64, Interface)> {
        self.snapshots
            .iter()
            .map(|f| (f.time(), f.zero_set()))
            .collect()
    }

    /// Field at time `t`, interpolated linearly between snapshots.
    pub fn field_at(&self, t: f64) -> Result<GridField> {
        let snaps = &self.snapshots;
        let first = snaps.first().ok_or(Error::EmptyInterface)?;
        let last = snaps.last().ok_or(Error::EmptyInterface)?;
        let tol = 1e-12 * (1.0 + t.abs());
        if t < first.time() - tol || t > last.time() + tol {
            return Err(Error::Domain {
                what: "snapshot time",
                value: t,
                lo: first.time(),
                hi: last.time(),
            });
        }
        for pair in snaps.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if t <= b.time() + tol {
                let span = b.time() - a.time();
                let w = if span > 0.0 {
                    ((t - a.time()) / span).clamp(0.0, 1.0)
                } else {
                    1.0
                };
                return a.lerp(b, w);
            }
        }
        Ok(last.clone())
    }
}

/// Piece of a zero level set. Points are unwrapped across the periodic
/// boundary, so a closed curve on the torus may end a lattice vector away
/// from where it started.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

impl Polyline {
    /// Segments including the closing one, which is unwrapped on a torus
    /// of side `box_len`.
    pub fn segments(&self, box_len: f64) -> impl Iterator<Item = ([f64; 2], [f64; 2])> + '_ {
        let n = self.points.len();
        let count = if self.closed { n } else { n.saturating_sub(1) };
        (0..count).map(move |k| {
            let a = self.points[k];
            let b = self.points[(k + 1) % n];
            (
                a,
                [
                    a[0] + wrap(b[0] - a[0], box_len),
                    a[1] + wrap(b[1] - a[1], box_len),
                ],
            )
        })
    }

    /// Signed shoelace area; positive when the positive phase is inside.
    pub fn area(&self, box_len: f64) -> f64 {
        0.5 * self
            .segments(box_len)
            .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
            .sum::<f64>()
    }

    /// Unit tangent at vertex `k` from neighbouring vertices.
    pub fn tangent(&self, k: usize, box_len: f64) -> [f64; 2] {
        let n = self.points.len();
        let (prev, next) = if self.closed {
            (self.points[(k + n - 1) % n], self.points[(k + 1) % n])
        } else {
            (
                self.points[k.saturating_sub(1)],
                self.points[(k + 1).min(n - 1)],
            )
        };
        let t = [
            wrap(next[0] - prev[0], box_len),
            wrap(next[1] - prev[1], box_len),
        ];
        let len = t[0].hypot(t[1]);
        if len == 0.0 {
            [0.0, 0.0]
        } else {
            [t[0] / len, t[1] / len]
        }
    }

    /// Unit normal at vertex `k`, pointing away from the positive phase.
    pub fn normal(&self, k: usize, box_len: f64) -> [f64; 2] {
        let t = self.tangent(k, box_len);
        [t[1], -t[0]]
    }
}

/// All polylines of a zero level set on a periodic box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub box_len: f64,
    pub polylines: Vec<Polyline>,
}

impl Interface {
    pub fn is_empty(&self) -> bool {
        self.polylines.iter().all(|p| p.points.is_empty())
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.polylines.iter().flat_map(|p| p.points.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.polylines.iter().map(|p| p.points.len()).sum()
    }

    /// Distance from `p` to the nearest segment, measured on the torus.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let mut best = f64::INFINITY;
        for line in &self.polylines {
            if line.points.len() == 1 {
                best = best.min(torus_dist(p, line.points[0], self.box_len));
            }
            for (a, b) in line.segments(self.box_len) {
                best = best.min(torus_segment_dist(p, a, b, self.box_len));
            }
        }
        best
    }

    /// Least-squares circle through the vertices (algebraic fit).
    pub fn fit_circle(&self) -> Result<([f64; 2], f64)> {
        let pts: Vec<[f64; 2]> = self.points().collect();
        fit_circle(&pts)
    }

    /// Signed distance along `dir` from `p` to the nearest crossing of this
    /// interface within `reach`.
    pub fn ray_hit(&self, p: [f64; 2], dir: [f64; 2], reach: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        let l = self.box_len;
        for line in &self.polylines {
            for (a, b) in line.segments(self.box_len) {
                // Bring the segment next to p.
                let shift = [
                    ((a[0] - p[0]) / l).round() * l,
                    ((a[1] - p[1]) / l).round() * l,
                ];
                let a = [a[0] - shift[0], a[1] - shift[1]];
                let b = [b[0] - shift[0], b[1] - shift[1]];
                let e = [b[0] - a[0], b[1] - a[1]];
                let den = dir[0] * e[1] - dir[1] * e[0];
                if den.abs() < 1e-300 {
                    continue;
                }
                let w = [a[0] - p[0], a[1] - p[1]];
                let t = (w[0] * e[1] - w[1] * e[0]) / den;
                let s = (w[0] * dir[1] - w[1] * dir[0]) / den;
                if (-1e-12..=1.0 + 1e-12).contains(&s)
                    && t.abs() <= reach
                    && best.is_none_or(|b| t.abs() < b.abs())
                {
                    best = Some(t);
                }
            }
        }
        best
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn wrap(d: f64, l: f64) -> f64 {
    d - (d / l).round() * l
}

fn torus_dist(a: [f64; 2], b: [f64; 2], l: f64) -> f64 {
    wrap(a[0] - b[0], l).hypot(wrap(a[1] - b[1], l))
}

fn torus_segment_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2], l: f64) -> f64 {
    let shift = [
        a[0] - p[0] - wrap(a[0] - p[0], l),
        a[1] - p[1] - wrap(a[1] - p[1], l),
    ];
    let a = [a[0] - shift[0], a[1] - shift[1]];
    let b = [b[0] - shift[0], b[1] - shift[1]];
    let e = [b[0] - a[0], b[1] - a[1]];
    let len2 = e[0] * e[0] + e[1] * e[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * e[0] + (p[1] - a[1]) * e[1]) / len2).clamp(0.0, 1.0)
    };
    dist(p, [a[0] + t * e[0], a[1] + t * e[1]])
}

/// Symmetric Hausdorff distance between two interfaces, vertices against
/// segments.
pub fn hausdorff(a: &Interface, b: &Interface) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let one = |x: &Interface, y: &Interface| -> f64 {
        let pts: Vec<[f64; 2]> = x.points().collect();
        pts.par_iter()
            .map(|&p| y.distance_to(p))
            .reduce(|| 0.0, f64::max)
    };
    Ok(one(a, b).max(one(b, a)))
}

/// Algebraic least-squares circle `x^2 + y^2 + D x + E y + F = 0`.
pub fn fit_circle(points: &[[f64; 2]]) -> Result<([f64; 2], f64)> {
    if points.len() < 3 {
        return Err(Error::EmptyInterface);
    }
    // Centre the data for conditioning.
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let mut m = [[0.0; 3]; 3];
    let mut r = [0.0; 3];
    for p in points {
        let (x, y) = (p[0] - cx, p[1] - cy);
        let row = [x, y, 1.0];
        let rhs = -(x * x + y * y);
        for a in 0..3 {
            for b in 0..3 {
                m[a][b] += row[a] * row[b];
            }
            r[a] += row[a] * rhs;
        }
    }
    let sol = solve3(m, r)
        .ok_or_else(|| Error::SolverDegeneracy("collinear points in circle fit".into()))?;
    let (d, e, f) = (sol[0], sol[1], sol[2]);
    let rad2 = 0.25 * (d * d + e * e) - f;
    if rad2 <= 0.0 {
        return Err(Error::SolverDegeneracy(
            "circle fit returned imaginary radius".into(),
        ));
    }
    Ok(([cx - 0.5 * d, cy - 0.5 * e], rad2.sqrt()))
}

fn solve3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> Option<[f64; 3]> {
    for c in 0..3 {
        let p = (c..3).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-300 {
            return None;
        }
        m.swap(c, p);
        r.swap(c, p);
        for row in c + 1..3 {
            let f = m[row][c] / m[c][c];
            for k in c..3 {
                m[row][k] -= f * m[c][k];
            }
            r[row] -= f * r[c];
        }
    }
    let mut x = [0.0; 3];
    for c in (0..3).rev() {
        let s: f64 = (c + 1..3).map(|k| m[c][k] * x[k]).sum();
        x[c] = (r[c] - s) / m[c][c];
    }
    Some(x)
}

/// Edge key: horizontal edges from node `(i, j)` to `(i+1, j)` are
/// `(i, j, 0)`, vertical ones to `(i, j+1)` are `(i, j, 1)`.
type EdgeKey = (usize, usize, u8);

fn marching_squares(field: &GridField) -> Interface {
    let n = field.n;
    let h = field.step();
    let v = |i: usize, j: usize| field.values[(j % n) * n + (i % n)];
    let crossing = |key: EdgeKey| -> [f64; 2] {
        let (i, j, dir) = key;
        let a = v(i, j);
        let b = if dir == 0 { v(i + 1, j) } else { v(i, j + 1) };
        let t = a / (a - b);
        if dir == 0 {
            [(i as f64 + t) * h, j as f64 * h]
        } else {
            [i as f64 * h, (j as f64 + t) * h]
        }
    };
    let positive = |x: f64| x > 0.0;

    // Oriented segments keyed by their starting edge.
    let mut next: HashMap<EdgeKey, EdgeKey> = HashMap::new();
    for j in 0..n {
        for i in 0..n {
            let c = [v(i, j), v(i + 1, j), v(i + 1, j + 1), v(i, j + 1)];
            let s: Vec<bool> = c.iter().map(|&x| positive(x)).collect();
            // Cell edges counter-clockwise: bottom, right, top, left.
            let edges: [EdgeKey; 4] = [
                (i, j, 0),
                ((i + 1) % n, j, 1),
                (i, (j + 1) % n, 0),
                (i, j, 1),
            ];
            let cut: Vec<usize> = (0..4).filter(|&e| s[e] != s[(e + 1) % 4]).collect();
            let pairs: Vec<(usize, usize)> = match cut.len() {
                2 => vec![(cut[0], cut[1])],
                4 => {
                    let centre = 0.25 * (c[0] + c[1] + c[2] + c[3]);
                    // Connect around the corners whose sign differs from the centre.
                    if positive(centre) == s[0] {
                        vec![(0, 1), (2, 3)]
                    } else {
                        vec![(3, 0), (1, 2)]
                    }
                }
                _ => vec![],
            };
            for (e1, e2) in pairs {
                // Walking counter-clockwise around the cell, the segment from
                // e1 to e2 has positive on its left when the corner after e1
                // is negative.
                let corner_after_e1 = s[(e1 + 1) % 4];
                let (from, to) = if corner_after_e1 {
                    (edges[e2], edges[e1])
                } else {
                    (edges[e1], edges[e2])
                };
                next.insert(from, to);
            }
        }
    }

    let mut polylines = Vec::new();
    let mut keys: Vec<EdgeKey> = next.keys().copied().collect();
    keys.sort_unstable();
    let mut used: HashMap<EdgeKey, bool> = HashMap::new();
    // Open chains start at edges that nothing points into.
    let targets: std::collections::HashSet<EdgeKey> = next.values().copied().collect();
    let starts: Vec<EdgeKey> = keys
        .iter()
        .copied()
        .filter(|k| !targets.contains(k))
        .chain(keys.iter().copied())
        .collect();
    let l = field.box_len;
    for start in starts {
        if used.contains_key(&start) {
            continue;
        }
        let mut points = Vec::new();
        let mut key = start;
        let mut closed = false;
        loop {
            used.insert(key, true);
            let mut p = crossing(key);
            if let Some(last) = points.last() {
                let last: &[f64; 2] = last;
                p = [
                    last[0] + wrap(p[0] - last[0], l),
                    last[1] + wrap(p[1] - last[1], l),
                ];
            }
            points.push(p);
            match next.get(&key) {
                Some(&k) if k == start => {
                    closed = true;
                    break;
                }
                Some(&k) if !used.contains_key(&k) => key = k,
                _ => break,
            }
        }
        polylines.push(Polyline { points, closed });
    }
    Interface {
        box_len: l,
        polylines,
    }
}
