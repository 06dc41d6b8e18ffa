//! Geometric observables of curves and trees.

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};
use crate::grid::RegionGraph;
use crate::stats::least_squares;
use crate::ust::{Curve, SpanningTree};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::PI;

/// A point of the plane or the point at infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extended {
    Finite(Point),
    Infinity,
}

impl From<Point> for Extended {
    fn from(p: Point) -> Self {
        Extended::Finite(p)
    }
}

impl Extended {
    /// Inverse stereographic projection onto the unit sphere.
    fn lift(self) -> [f64; 3] {
        match self {
            Extended::Infinity => [0.0, 0.0, 1.0],
            Extended::Finite(p) => {
                let s = p.norm_sq();
                let d = 1.0 + s;
                [2.0 * p.x / d, 2.0 * p.y / d, (s - 1.0) / d]
            }
        }
    }
}

/// Length-minimizing distance for the conformal metric `|dx| / (1 + |x|^2)`:
/// half the great-circle angle between the lifted points.
pub fn sphere_metric(u: impl Into<Extended>, v: impl Into<Extended>) -> f64 {
    let (a, b) = (u.into().lift(), v.into().lift());
    let norm = |f: &dyn Fn(usize) -> f64| (0..3).map(|i| f(i).powi(2)).sum::<f64>().sqrt();
    let diff = norm(&|i| a[i] - b[i]);
    let sum = norm(&|i| a[i] + b[i]);
    diff.atan2(sum)
}

/// Inserts points so that consecutive vertices are at most `step` apart.
pub fn refine(points: &[Point], step: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let pieces = (w[0].dist(w[1]) / step).ceil().max(1.0) as usize;
        for i in 0..pieces {
            let t = i as f64 / pieces as f64;
            out.push(w[0] + (w[1] - w[0]) * t);
        }
    }
    out.extend(points.last());
    out
}

fn discrete_frechet(a: &[Point], b: &[Point]) -> f64 {
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, &p) in a.iter().enumerate() {
        for (j, &q) in b.iter().enumerate() {
            let d = sphere_metric(p, q);
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Discrete Fréchet distance under [`sphere_metric`], minimized over both
/// orientations of `c2`. Refine both curves first to control the
/// discretization error.
pub fn curve_distance(c1: &Curve, c2: &Curve) -> Result<f64> {
    if c1.is_empty() || c2.is_empty() {
        return Err(Error::Empty);
    }
    let fwd = discrete_frechet(c1.points(), c2.points());
    let rev: Vec<Point> = c2.points().iter().rev().copied().collect();
    Ok(fwd.min(discrete_frechet(c1.points(), &rev)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub scales: Vec<f64>,
    pub counts: Vec<u64>,
    pub slope: f64,
    pub stderr: f64,
    /// Smallest and largest box side used in the fit.
    pub fit_range: (f64, f64),
}

fn diameter_bound(points: &[Point]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    (x1 - x0).max(y1 - y0)
}

/// Dyadic box sides from `diam / 8` down to `4 * resolution`.
pub fn dyadic_scales(points: &[Point], resolution: f64) -> Vec<f64> {
    let mut scales = Vec::new();
    let mut l = diameter_bound(points) / 8.0;
    while l >= 4.0 * resolution {
        scales.push(l);
        l /= 2.0;
    }
    scales
}

/// Occupied-box counts at each side length and the slope of
/// `log N` against `log (1 / side)`.
pub fn box_counting(points: &[Point], scales: &[f64]) -> Result<DimensionFit> {
    if points.is_empty() {
        return Err(Error::Empty);
    }
    if scales.len() < 4 || scales.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "need at least 4 positive scales, got {scales:?}"
        )));
    }
    let origin = points.iter().fold(Point::new(f64::MAX, f64::MAX), |o, p| Point::new(o.x.min(p.x), o.y.min(p.y)));
    let counts: Vec<u64> = scales
        .iter()
        .map(|&l| {
            points
                .iter()
                .map(|p| (((p.x - origin.x) / l).floor() as i64, ((p.y - origin.y) / l).floor() as i64))
                .collect::<HashSet<_>>()
                .len() as u64
        })
        .collect();
    let design: Vec<Vec<f64>> = scales.iter().map(|l| vec![1.0, -l.ln()]).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (coef, rss) = least_squares(&design, &ys)
        .ok_or_else(|| Error::FitFailed("degenerate box-counting design".into()))?;
    let n = scales.len() as f64;
    let xs: Vec<f64> = design.iter().map(|r| r[1]).collect();
    let xbar = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    let (lo, hi) = scales.iter().fold((f64::MAX, f64::MIN), |(a, b), &l| (a.min(l), b.max(l)));
    Ok(DimensionFit {
        scales: scales.to_vec(),
        counts,
        slope: coef[1],
        stderr,
        fit_range: (lo, hi),
    })
}

/// Largest value of `|g(t) - g(t')| / ((1 + |g(t)|^2 + |g(t')|^2) |t - t'|^alpha)`
/// with `g` the curve parametrized by normalized vertex index.
pub fn holder_modulus(c: &Curve, alpha: f64) -> Result<f64> {
    let pts = c.points();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("curve needs at least two points".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("exponent {alpha} outside [0, 1]")));
    }
    let n = (pts.len() - 1) as f64;
    let sq: Vec<f64> = pts.iter().map(|p| p.norm_sq()).collect();
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let dt = (j - i) as f64 / n;
            let v = pts[i].dist(pts[j]) / ((1.0 + sq[i] + sq[j]) * dt.powf(alpha));
            best = best.max(v);
        }
    }
    Ok(best)
}

/// Tree adjacency lists.
fn tree_adjacency(g: &RegionGraph, t: &SpanningTree) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.num_vertices()];
    for &e in t.edges() {
        let edge = g.edge(e);
        adj[edge.a].push(edge.b);
        adj[edge.b].push(edge.a);
    }
    adj
}

fn scale_degree(g: &RegionGraph, adj: &[Vec<usize>], v: usize, eps: f64, seen: &mut HashSet<usize>) -> usize {
    let Some(center) = g.point(v) else {
        return 0;
    };
    // a vertex without a position is the wired boundary, which is far away
    let far = |w: usize| g.point(w).is_none_or(|p| p.dist(center) >= eps);
    let mut count = 0;
    for &start in &adj[v] {
        seen.clear();
        seen.insert(v);
        seen.insert(start);
        let mut stack = vec![start];
        while let Some(w) = stack.pop() {
            if far(w) {
                count += 1;
                break;
            }
            for &x in &adj[w] {
                if seen.insert(x) {
                    stack.push(x);
                }
            }
        }
    }
    count
}

/// Number of components of the tree minus `v` that reach Euclidean
/// distance `eps` from `v`.
pub fn branch_scale_degree(g: &RegionGraph, t: &SpanningTree, v: usize, eps: f64) -> usize {
    scale_degree(g, &tree_adjacency(g, t), v, eps, &mut HashSet::new())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingCensus {
    pub eps: f64,
    /// The window shrunk by `2 eps` on every side.
    pub window: Rect,
    pub vertices: Vec<usize>,
    pub count: usize,
}

/// Vertices inside `window` (less a margin of `2 eps`) whose scale-`eps`
/// degree is at least 3.
pub fn branching_census(g: &RegionGraph, t: &SpanningTree, eps: f64, window: &Rect) -> BranchingCensus {
    let inner = Rect::new(window.x0 + 2.0 * eps, window.y0 + 2.0 * eps, window.x1 - 2.0 * eps, window.y1 - 2.0 * eps);
    let adj = tree_adjacency(g, t);
    let mut seen = HashSet::new();
    let vertices: Vec<usize> = (0..g.num_vertices())
        .filter(|&v| adj[v].len() >= 3 && g.point(v).is_some_and(|p| !inner.is_empty() && inner.contains(p)))
        .filter(|&v| scale_degree(g, &adj, v, eps, &mut seen) >= 3)
        .collect();
    BranchingCensus {
        eps,
        window: inner,
        count: vertices.len(),
        vertices,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircleCover {
    pub centers: Vec<Point>,
    pub radius: f64,
    pub sigma: f64,
    /// Indices into `centers`.
    pub families: Vec<Vec<usize>>,
}

/// Evenly spaced centers on the unit circle whose radius-`c` discs cover it,
/// split greedily into families whose `sigma`-dilated discs are disjoint.
pub fn cover_circle(c: f64, sigma: f64) -> Result<CircleCover> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("radius {c} outside (0, 1)")));
    }
    if !(sigma >= 1.0) {
        return Err(Error::InvalidArgument(format!("dilation {sigma} below 1")));
    }
    // a chord of length c subtends 2 asin(c/2)
    let n = (PI / (2.0 * (c / 2.0).asin())).ceil() as usize;
    let centers: Vec<Point> = (0..n)
        .map(|i| {
            let a = 2.0 * PI * i as f64 / n as f64;
            Point::new(a.cos(), a.sin())
        })
        .collect();
    let mut families: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let slot = families
            .iter()
            .position(|f| f.iter().all(|&j| centers[i].dist(centers[j]) >= 2.0 * sigma * c));
        match slot {
            Some(s) => families[s].push(i),
            None => families.push(vec![i]),
        }
    }
    Ok(CircleCover {
        centers,
        radius: c,
        sigma,
        families,
    })
}
