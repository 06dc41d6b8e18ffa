//! Uniform spanning trees by Wilson's algorithm, loop-erased random walk,
//! and the winding experiment behind choking surfaces.

use crate::error::{Error, Result};
use crate::geom::{angle_increment, Point};
use crate::grid::{Boundary, RegionGraph};
use crate::record::{EstimateRecord, GeometryKind, Model};
use crate::rng::seed_stream;
use crate::unionfind::DisjointSets;
use rand::Rng;
use rayon::prelude::*;
use std::collections::HashMap;
use std::hash::Hash;

const NONE: u32 = u32::MAX;

/// An ordered polyline, e.g. a tree branch or a walk trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    points: Vec<Point>,
}

impl Curve {
    pub fn new(points: Vec<Point>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("curve needs at least one point".into()));
        }
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("curve repeats a point consecutively".into()));
        }
        Ok(Curve { points })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reversed(&self) -> Curve {
        let mut points = self.points.clone();
        points.reverse();
        Curve { points }
    }

    /// Chronological loop erasure of the trajectory.
    pub fn loop_erased(&self) -> Curve {
        let keys: Vec<(u64, u64)> = self
            .points
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits()))
            .collect();
        let kept = loop_erase_positions(&keys);
        Curve {
            points: kept.into_iter().map(|i| self.points[i]).collect(),
        }
    }
}

/// Chronological loop erasure: scanning forward, a revisit to a vertex still
/// on the erased path cuts the path back to that vertex.
pub fn loop_erase<T: Copy + Eq + Hash>(walk: &[T]) -> Vec<T> {
    loop_erase_positions(walk)
        .into_iter()
        .map(|i| walk[i])
        .collect()
}

fn loop_erase_positions<T: Copy + Eq + Hash>(walk: &[T]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut on_path: HashMap<T, usize> = HashMap::new();
    for (t, &v) in walk.iter().enumerate() {
        if let Some(&at) = on_path.get(&v) {
            for &dropped in &out[at + 1..] {
                on_path.remove(&walk[dropped]);
            }
            out.truncate(at + 1);
        } else {
            on_path.insert(v, out.len());
            out.push(t);
        }
    }
    out
}

/// A spanning tree of a [`RegionGraph`], oriented towards `root`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanningTree {
    root: usize,
    edges: Vec<usize>,
    parent_edge: Vec<u32>,
}

impl SpanningTree {
    /// Validates that `edges` span `g` without cycles and orients them.
    pub fn from_edges(g: &RegionGraph, edges: &[usize], root: usize) -> Result<Self> {
        let n = g.num_vertices();
        if root >= n {
            return Err(Error::InvalidArgument(format!("root {root} out of range")));
        }
        if edges.len() + 1 != n {
            return Err(Error::NotSpanningTree(format!(
                "{} edges for {} vertices",
                edges.len(),
                n
            )));
        }
        let mut d = DisjointSets::new(n);
        for &e in edges {
            let edge = g.edges().get(e).ok_or_else(|| {
                Error::NotSpanningTree(format!("edge {e} not in graph"))
            })?;
            if !d.union(edge.a, edge.b) {
                return Err(Error::NotSpanningTree(format!("edge {e} closes a cycle")));
            }
        }
        let mut in_tree = vec![false; g.num_edges()];
        for &e in edges {
            in_tree[e] = true;
        }
        let mut parent_edge = vec![NONE; n];
        let mut seen = vec![false; n];
        seen[root] = true;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for &(u, e) in g.neighbors(v) {
                if in_tree[e as usize] && !seen[u as usize] {
                    seen[u as usize] = true;
                    parent_edge[u as usize] = e;
                    stack.push(u as usize);
                }
            }
        }
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        Ok(SpanningTree {
            root,
            edges: sorted,
            parent_edge,
        })
    }

    fn from_parent_edges(root: usize, parent_edge: Vec<u32>) -> Self {
        let mut edges: Vec<usize> = parent_edge
            .iter()
            .filter(|&&e| e != NONE)
            .map(|&e| e as usize)
            .collect();
        edges.sort_unstable();
        SpanningTree {
            root,
            edges,
            parent_edge,
        }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Tree edge indices, sorted.
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.parent_edge.len()
    }

    pub fn parent_edge(&self, v: usize) -> Option<usize> {
        let e = self.parent_edge[v];
        (e != NONE).then_some(e as usize)
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.binary_search(&e).is_ok()
    }

    /// Vertices from `v` up to the root, inclusive.
    pub fn path_to_root(&self, g: &RegionGraph, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut u = v;
        while let Some(e) = self.parent_edge(u) {
            u = g.edge(e).other(u);
            path.push(u);
        }
        path
    }

    /// The unique tree path from `u` to `v`.
    pub fn path(&self, g: &RegionGraph, u: usize, v: usize) -> Vec<usize> {
        let mut a = self.path_to_root(g, u);
        let mut b = self.path_to_root(g, v);
        let mut lca = *a.last().unwrap();
        while let (Some(&x), Some(&y)) = (a.last(), b.last()) {
            if x != y {
                break;
            }
            lca = x;
            a.pop();
            b.pop();
        }
        a.push(lca);
        a.extend(b.into_iter().rev());
        a
    }
}

/// Runs Wilson's walks from each start in turn, growing the tree marked by
/// `in_tree`; `next` receives each new vertex's parent edge.
fn grow_wilson<R: Rng + ?Sized>(
    g: &RegionGraph,
    in_tree: &mut [bool],
    next: &mut [u32],
    starts: impl IntoIterator<Item = usize>,
    rng: &mut R,
) {
    for s in starts {
        let mut u = s;
        while !in_tree[u] {
            let nb = g.neighbors(u);
            let (w, e) = nb[rng.gen_range(0..nb.len())];
            next[u] = e;
            u = w as usize;
        }
        let mut u = s;
        while !in_tree[u] {
            in_tree[u] = true;
            u = g.edge(next[u] as usize).other(u);
        }
    }
}

fn require_connected(g: &RegionGraph) -> Result<()> {
    match g.components() {
        1 => Ok(()),
        c => Err(Error::Disconnected { components: c }),
    }
}

/// Uniform spanning tree of a connected graph, rooted at `root`. Walks start
/// from unvisited vertices in increasing index order.
pub fn wilson_ust<R: Rng + ?Sized>(g: &RegionGraph, root: usize, rng: &mut R) -> Result<SpanningTree> {
    require_connected(g)?;
    let n = g.num_vertices();
    if root >= n {
        return Err(Error::InvalidArgument(format!("root {root} out of range")));
    }
    let mut in_tree = vec![false; n];
    let mut next = vec![NONE; n];
    in_tree[root] = true;
    grow_wilson(g, &mut in_tree, &mut next, 0..n, rng);
    next[root] = NONE;
    Ok(SpanningTree::from_parent_edges(root, next))
}

/// Uniform spanning tree conditioned to contain the connected acyclic edge
/// set `forced`, obtained by starting Wilson's algorithm from `forced` as the
/// current tree. The root is the smallest vertex touched by `forced`.
pub fn wilson_ust_conditioned<R: Rng + ?Sized>(
    g: &RegionGraph,
    forced: &[usize],
    rng: &mut R,
) -> Result<SpanningTree> {
    require_connected(g)?;
    if forced.is_empty() {
        return wilson_ust(g, 0, rng);
    }
    let n = g.num_vertices();
    let mut d = DisjointSets::new(n);
    let mut touched = vec![false; n];
    let mut forced_edge = vec![false; g.num_edges()];
    for &e in forced {
        let edge = g
            .edges()
            .get(e)
            .ok_or_else(|| Error::BadForcedEdges(format!("edge {e} not in graph")))?;
        if !d.union(edge.a, edge.b) {
            return Err(Error::BadForcedEdges(format!("edge {e} closes a cycle")));
        }
        touched[edge.a] = true;
        touched[edge.b] = true;
        forced_edge[e] = true;
    }
    let root = touched.iter().position(|&t| t).unwrap();
    let rep = d.find(root);
    if (0..n).any(|v| touched[v] && d.find(v) != rep) {
        return Err(Error::BadForcedEdges("forced edges are not connected".into()));
    }
    let mut next = vec![NONE; n];
    let mut in_tree = vec![false; n];
    in_tree[root] = true;
    let mut stack = vec![root];
    while let Some(v) = stack.pop() {
        for &(u, e) in g.neighbors(v) {
            if forced_edge[e as usize] && !in_tree[u as usize] {
                in_tree[u as usize] = true;
                next[u as usize] = e;
                stack.push(u as usize);
            }
        }
    }
    grow_wilson(g, &mut in_tree, &mut next, 0..n, rng);
    Ok(SpanningTree::from_parent_edges(root, next))
}

/// Union of the UST branches from `starts` to `root`: the restriction of a
/// uniform spanning tree to the paths joining the starts to the root, drawn
/// without sampling the rest of the tree. Returns the edge indices.
pub fn wilson_branches<R: Rng + ?Sized>(
    g: &RegionGraph,
    root: usize,
    starts: &[usize],
    rng: &mut R,
) -> Vec<usize> {
    let n = g.num_vertices();
    let mut in_tree = vec![false; n];
    let mut next = vec![NONE; n];
    in_tree[root] = true;
    grow_wilson(g, &mut in_tree, &mut next, starts.iter().copied(), rng);
    next.iter()
        .enumerate()
        .filter(|&(v, &e)| v != root && in_tree[v] && e != NONE)
        .map(|(_, &e)| e as usize)
        .collect()
}

/// Outcome of one winding walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindingOutcome {
    /// The erased trajectory closed a loop around the inner disc.
    Wound,
    /// The walk reached one of the boundary circles first.
    HitBoundary,
}

/// Simple random walk on `δZ²` from lattice site `start` inside the shell
/// `r <= |x| <= outer` (centred at the origin). Stops when the walk leaves
/// the closed shell, or when the loop erasure of the walk so far, closed by
/// the current step, contains a loop winding around the inner disc.
pub fn winding_walk<R: Rng + ?Sized>(
    delta: f64,
    r: f64,
    outer: f64,
    start: (i64, i64),
    rng: &mut R,
) -> WindingOutcome {
    const TOL: f64 = 1e-9;
    let m = (outer / delta).ceil() as i64 + 1;
    let side = (2 * m + 1) as usize;
    let slot = |(i, j): (i64, i64)| ((j + m) as usize) * side + (i + m) as usize;
    let pos = |(i, j): (i64, i64)| Point::new(i as f64 * delta, j as f64 * delta);
    let inside = |p: Point| {
        let d = p.norm();
        d >= r && d <= outer
    };
    let mut index = vec![0u32; side * side];
    let mut path = vec![start];
    let mut wind = vec![0.0f64];
    index[slot(start)] = 1;
    loop {
        let here = *path.last().unwrap();
        let step = match rng.gen_range(0..4) {
            0 => (here.0 + 1, here.1),
            1 => (here.0 - 1, here.1),
            2 => (here.0, here.1 + 1),
            _ => (here.0, here.1 - 1),
        };
        if !inside(pos(step)) {
            return WindingOutcome::HitBoundary;
        }
        let turn = angle_increment(Point::ORIGIN, pos(here), pos(step));
        let at = index[slot(step)];
        if at != 0 {
            let at = at as usize - 1;
            let loop_winding = wind[wind.len() - 1] - wind[at] + turn;
            if loop_winding.abs() >= std::f64::consts::TAU - TOL {
                return WindingOutcome::Wound;
            }
            for &v in &path[at + 1..] {
                index[slot(v)] = 0;
            }
            path.truncate(at + 1);
            wind.truncate(at + 1);
        } else {
            index[slot(step)] = path.len() as u32 + 1;
            path.push(step);
            wind.push(wind[wind.len() - 1] + turn);
        }
    }
}

/// Straight radial lattice path along the positive x-axis crossing the
/// free/wired annulus graph `g` of radii `(r, outer)` centred at the origin:
/// the edges from the innermost axis vertex to the wired vertex.
pub fn radial_traversal(g: &RegionGraph, r: f64, outer: f64, delta: f64) -> Result<Vec<usize>> {
    let keys = g.edge_index_by_key();
    let first = (r / delta).ceil() as i64;
    let last = (outer / delta).floor() as i64;
    let mut path = Vec::new();
    for i in first..=last {
        let key = crate::grid::LatticeKey::new([2 * i, 0], [2 * i + 2, 0]);
        match keys.get(&key) {
            Some(&e) => path.push(e),
            None => return Err(Error::InvalidGeometry(format!("no lattice edge at step {i}"))),
        }
    }
    Ok(path)
}

/// Frequency with which the winding walk from a point at radius `2r` wraps
/// around the inner disc of `D(r, 3r)` before touching either boundary.
pub fn estimate_choking_probability(
    delta: f64,
    r: f64,
    n_samples: u64,
    seed: u64,
) -> Result<EstimateRecord> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    if !(delta > 0.0 && delta < r) {
        return Err(Error::InvalidGeometry(format!("need 0 < delta < r, got {delta}")));
    }
    let outer = 3.0 * r;
    let start = (-(2.0 * r / delta).round() as i64, 0);
    let wins: u64 = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed_stream(seed, i);
            u64::from(winding_walk(delta, r, outer, start, &mut rng) == WindingOutcome::Wound)
        })
        .sum();
    Ok(EstimateRecord::proportion(
        Model::Ust,
        "choking",
        GeometryKind::Annulus,
        (r, outer),
        0,
        delta,
        (Boundary::Free, Boundary::Wired),
        wins,
        n_samples,
        seed,
    ))
}
