//! Euclidean minimal spanning trees on Poisson point sets, and the droplet
//! (Boolean disc) and vacant continuum percolation models that drive their
//! crossing estimates.

use crate::error::{Error, Result};
use crate::geom::{point_segment_distance, Point, Rect};
use crate::grid::{Boundary, Edge, RegionGraph};
use crate::mst::{kruskal_mst, CheckReport};
use crate::record::{EstimateRecord, GeometryKind, Model};
use crate::rng::seed_stream;
use crate::stats::z_two_sided;
use crate::unionfind::DisjointSets;
use crate::ust::SpanningTree;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use spade::{DelaunayTriangulation, HasPosition, Point2, Triangulation};
use std::collections::HashSet;

/// Sampling window for point processes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region {
    Rect(Rect),
    /// `r <= |x - center| <= outer`; `r = 0` is a disc.
    Annulus { center: Point, r: f64, outer: f64 },
}

impl Region {
    pub fn area(&self) -> f64 {
        match *self {
            Region::Rect(rect) => rect.area(),
            Region::Annulus { r, outer, .. } => std::f64::consts::PI * (outer * outer - r * r),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match *self {
            Region::Rect(rect) => rect.contains(p),
            Region::Annulus { center, r, outer } => {
                let d = p.dist(center);
                d >= r && d <= outer
            }
        }
    }

    pub fn bounding_box(&self) -> Rect {
        match *self {
            Region::Rect(rect) => rect,
            Region::Annulus { center, outer, .. } => Rect::new(
                center.x - outer,
                center.y - outer,
                center.x + outer,
                center.y + outer,
            ),
        }
    }

    /// Distance from an interior point to the inner boundary (`None` for
    /// rectangles and discs).
    pub fn inner_distance(&self, p: Point) -> Option<f64> {
        match *self {
            Region::Annulus { center, r, .. } if r > 0.0 => Some(p.dist(center) - r),
            _ => None,
        }
    }

    /// Distance from an interior point to the outer boundary.
    pub fn outer_distance(&self, p: Point) -> f64 {
        match *self {
            Region::Rect(rect) => rect.boundary_distance(p),
            Region::Annulus { center, outer, .. } => outer - p.dist(center),
        }
    }

    fn is_empty(&self) -> bool {
        match *self {
            Region::Rect(rect) => rect.is_empty(),
            Region::Annulus { r, outer, .. } => outer <= r,
        }
    }
}

/// Points inside a region, sampled at intensity `delta^-2`.
#[derive(Clone, Debug)]
pub struct PointSet {
    pub points: Vec<Point>,
    pub delta: f64,
    pub region: Region,
}

impl PointSet {
    /// Checks that every point lies in `region` and that no point repeats.
    pub fn new(points: Vec<Point>, delta: f64, region: Region) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::InvalidGeometry(format!("delta must be positive, got {delta}")));
        }
        if let Some(p) = points.iter().find(|p| !region.contains(**p)) {
            return Err(Error::InvalidGeometry(format!("point {p:?} outside the region")));
        }
        let mut seen = HashSet::with_capacity(points.len());
        for p in &points {
            if !seen.insert((p.x.to_bits(), p.y.to_bits())) {
                return Err(Error::InvalidArgument(format!("duplicate point {p:?}")));
            }
        }
        Ok(PointSet {
            points,
            delta,
            region,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Homogeneous Poisson process of intensity `delta^-2` on `region`.
pub fn sample_poisson<R: Rng + ?Sized>(region: Region, delta: f64, rng: &mut R) -> Result<PointSet> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidGeometry(format!("delta must be positive, got {delta}")));
    }
    if region.is_empty() {
        return Ok(PointSet {
            points: Vec::new(),
            delta,
            region,
        });
    }
    let mean = region.area() / (delta * delta);
    if mean <= 0.0 {
        return Ok(PointSet {
            points: Vec::new(),
            delta,
            region,
        });
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng) as usize;
    let bbox = region.bounding_box();
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let p = Point::new(
            rng.gen_range(bbox.x0..bbox.x1),
            rng.gen_range(bbox.y0..bbox.y1),
        );
        if region.contains(p) {
            points.push(p);
        }
    }
    Ok(PointSet {
        points,
        delta,
        region,
    })
}

#[derive(Clone, Copy, Debug)]
struct Site {
    pos: Point2<f64>,
    index: usize,
}

impl HasPosition for Site {
    type Scalar = f64;
    fn position(&self) -> Point2<f64> {
        self.pos
    }
}

fn triangulate(points: &[Point]) -> Result<DelaunayTriangulation<Site>> {
    let sites = points
        .iter()
        .enumerate()
        .map(|(index, p)| Site {
            pos: Point2::new(p.x, p.y),
            index,
        })
        .collect();
    DelaunayTriangulation::bulk_load(sites).map_err(|e| Error::InvalidGeometry(format!("{e:?}")))
}

/// Delaunay edges as sorted index pairs. Collinear input yields the path
/// along the line.
pub fn delaunay_edges(points: &[Point]) -> Result<Vec<(usize, usize)>> {
    if points.len() < 2 {
        return Ok(Vec::new());
    }
    let t = triangulate(points)?;
    let mut edges: Vec<(usize, usize)> = t
        .undirected_edges()
        .map(|e| {
            let [a, b] = e.vertices();
            let (a, b) = (a.data().index, b.data().index);
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    Ok(edges)
}

/// The Delaunay graph with Euclidean edge lengths.
pub fn delaunay_graph(pts: &PointSet) -> Result<RegionGraph> {
    if pts.is_empty() {
        return Err(Error::Empty);
    }
    let edges = delaunay_edges(&pts.points)?
        .into_iter()
        .map(|(a, b)| Edge::new(a, b, pts.points[a].dist(pts.points[b])))
        .collect();
    RegionGraph::from_parts(pts.points.clone(), false, edges)
}

/// The Voronoi diagram of a point set, restricted to its bounded edges. Four
/// far-away auxiliary sites make every cell of a real point bounded.
#[derive(Clone, Debug)]
pub struct Voronoi {
    pub vertices: Vec<Point>,
    pub edges: Vec<VoronoiEdge>,
    /// Sites with index `>= real` are the auxiliary ones.
    pub real: usize,
    sites: Vec<Point>,
    triangulation: DelaunayTriangulation<Site>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VoronoiEdge {
    pub ends: [usize; 2],
    /// The two sites whose cells share this edge (the dual Delaunay edge).
    pub sites: [usize; 2],
}

impl Voronoi {
    /// `frame` sets the scale for the auxiliary sites; it should cover every
    /// location that will be queried.
    pub fn new(points: &[Point], frame: &Rect) -> Result<Self> {
        let c = Point::new(0.5 * (frame.x0 + frame.x1), 0.5 * (frame.y0 + frame.y1));
        let s = 100.0 * (frame.width().max(frame.height()) + 1.0);
        let mut sites = points.to_vec();
        sites.extend([
            Point::new(c.x - s, c.y - s),
            Point::new(c.x + s, c.y - s),
            Point::new(c.x + s, c.y + s),
            Point::new(c.x - s, c.y + s),
        ]);
        let t = triangulate(&sites)?;
        let mut slot = vec![usize::MAX; t.num_all_faces()];
        let mut vertices = Vec::with_capacity(t.num_inner_faces());
        for f in t.inner_faces() {
            let cc = f.circumcenter();
            slot[f.fix().index()] = vertices.len();
            vertices.push(Point::new(cc.x, cc.y));
        }
        let mut edges = Vec::new();
        for e in t.undirected_edges() {
            let d = e.as_directed();
            let (f1, f2) = (d.face(), d.rev().face());
            if let (Some(f1), Some(f2)) = (f1.as_inner(), f2.as_inner()) {
                let [a, b] = e.vertices();
                edges.push(VoronoiEdge {
                    ends: [slot[f1.fix().index()], slot[f2.fix().index()]],
                    sites: [a.data().index, b.data().index],
                });
            }
        }
        Ok(Voronoi {
            vertices,
            edges,
            real: points.len(),
            sites,
            triangulation: t,
        })
    }

    pub fn site(&self, i: usize) -> Point {
        self.sites[i]
    }

    /// Index of a site nearest to `p` (possibly auxiliary).
    pub fn nearest_site(&self, p: Point) -> usize {
        self.triangulation
            .nearest_neighbor(Point2::new(p.x, p.y))
            .map(|v| v.data().index)
            .expect("triangulation has sites")
    }

    /// Distance from the segment `a b` of edge `e` to the nearest site.
    fn clearance(&self, e: &VoronoiEdge, a: Point, b: Point) -> f64 {
        point_segment_distance(self.sites[e.sites[0]], a, b)
    }

    /// Whether the dual Delaunay pair of `e` is at least `2 p delta` apart.
    pub fn is_dual_vacant(&self, e: &VoronoiEdge, p: f64, delta: f64) -> bool {
        self.sites[e.sites[0]].dist(self.sites[e.sites[1]]) >= 2.0 * p * delta
    }
}

/// Vertices of the Voronoi cell of `points[i]`, clipped to `frame`,
/// computed by half-plane clipping against the bisectors with its
/// Delaunay neighbours.
fn voronoi_cell(points: &[Point], i: usize, neighbours: &[usize], frame: &Rect) -> Vec<Point> {
    let mut poly = vec![
        Point::new(frame.x0, frame.y0),
        Point::new(frame.x1, frame.y0),
        Point::new(frame.x1, frame.y1),
        Point::new(frame.x0, frame.y1),
    ];
    let x = points[i];
    for &j in neighbours {
        let y = points[j];
        let n = y - x;
        let m = x.midpoint(y);
        // keep {q : (q - m) . n <= 0}
        let side = |q: Point| (q - m).dot(n);
        let mut out = Vec::with_capacity(poly.len() + 1);
        for k in 0..poly.len() {
            let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
            let (sa, sb) = (side(a), side(b));
            if sa <= 0.0 {
                out.push(a);
            }
            if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
                out.push(a + (b - a) * (sa / (sa - sb)));
            }
        }
        poly = out;
        if poly.is_empty() {
            break;
        }
    }
    poly
}

fn polygon_distance(poly: &[Point], q: Point) -> f64 {
    if poly.is_empty() {
        return f64::INFINITY;
    }
    let mut inside = true;
    let mut best = f64::INFINITY;
    for k in 0..poly.len() {
        let (a, b) = (poly[k], poly[(k + 1) % poly.len()]);
        if (b - a).cross(q - a) < 0.0 {
            inside = false;
        }
        best = best.min(point_segment_distance(q, a, b));
    }
    if inside {
        0.0
    } else {
        best
    }
}

/// The EST region graph: Delaunay edges plus, for wired sides, one edge per
/// point to the wired vertex whose length is the distance to the nearest
/// wired boundary. Free-boundary tags mark points whose Voronoi cell reaches
/// across the corresponding boundary.
pub fn est_graph(pts: &PointSet, bc: (Boundary, Boundary)) -> Result<RegionGraph> {
    if pts.is_empty() {
        return Err(Error::Empty);
    }
    let n = pts.len();
    let pairs = delaunay_edges(&pts.points)?;
    let mut edges: Vec<Edge> = pairs
        .iter()
        .map(|&(a, b)| Edge::new(a, b, pts.points[a].dist(pts.points[b])))
        .collect();
    let inner_exists = pts.region.inner_distance(Point::ORIGIN).is_some();
    let wired_inner = inner_exists && bc.0 == Boundary::Wired;
    let wired_outer = bc.1 == Boundary::Wired;
    if wired_inner || wired_outer {
        for (v, &p) in pts.points.iter().enumerate() {
            let mut len = f64::INFINITY;
            if wired_outer {
                len = len.min(pts.region.outer_distance(p));
            }
            if wired_inner {
                len = len.min(pts.region.inner_distance(p).unwrap_or(f64::INFINITY));
            }
            edges.push(Edge::new(v, n, len.max(0.0)));
        }
    }
    let g = RegionGraph::from_parts(pts.points.clone(), wired_inner || wired_outer, edges)?;
    let need_inner = inner_exists && !wired_inner;
    let need_outer = !wired_outer;
    let mut inner_free = Vec::new();
    let mut outer_free = Vec::new();
    if need_inner || need_outer {
        let bbox = pts.region.bounding_box();
        let pad = bbox.width().max(bbox.height());
        let frame = Rect::new(bbox.x0 - pad, bbox.y0 - pad, bbox.x1 + pad, bbox.y1 + pad);
        let mut nbrs = vec![Vec::new(); n];
        for &(a, b) in &pairs {
            nbrs[a].push(b);
            nbrs[b].push(a);
        }
        for v in 0..n {
            let cell = voronoi_cell(&pts.points, v, &nbrs[v], &frame);
            match pts.region {
                Region::Annulus { center, r, outer } => {
                    if need_inner && polygon_distance(&cell, center) < r {
                        inner_free.push(v);
                    }
                    if need_outer && cell.iter().any(|q| q.dist(center) > outer) {
                        outer_free.push(v);
                    }
                }
                Region::Rect(rect) => {
                    if need_outer && cell.iter().any(|q| !rect.contains(*q)) {
                        outer_free.push(v);
                    }
                }
            }
        }
    }
    Ok(g.with_boundaries(inner_free, outer_free, [wired_inner, wired_outer]))
}

/// An EST sample: the region graph and its minimal spanning tree.
#[derive(Clone, Debug)]
pub struct EstSample {
    pub graph: RegionGraph,
    pub tree: SpanningTree,
}

/// Euclidean minimal spanning tree with the given (inner, outer) boundary
/// conditions; for rectangles only the outer one applies.
pub fn euclidean_mst(pts: &PointSet, bc: (Boundary, Boundary)) -> Result<EstSample> {
    let graph = est_graph(pts, bc)?;
    let lengths: Vec<f64> = graph.edges().iter().map(|e| e.length).collect();
    let tree = kruskal_mst(&graph, &lengths)?;
    Ok(EstSample { graph, tree })
}

/// Labels of the droplet clusters: points closer than `2 p delta` share a
/// label (the smallest index in the cluster).
pub fn droplet_components(points: &[Point], p: f64, delta: f64) -> Vec<usize> {
    let n = points.len();
    let mut d = DisjointSets::new(n);
    let reach = 2.0 * p * delta;
    if n > 1 && reach > 0.0 {
        for (a, b) in close_pairs(points, reach) {
            d.union(a, b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut out = vec![0; n];
    for v in 0..n {
        let root = d.find(v);
        if label[root] == usize::MAX {
            label[root] = v;
        }
        out[v] = label[root];
    }
    out
}

/// Pairs at distance strictly less than `reach`, by grid bucketing.
fn close_pairs(points: &[Point], reach: f64) -> Vec<(usize, usize)> {
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
    }
    let cell = |p: &Point| (((p.x - x0) / reach) as i64, ((p.y - y0) / reach) as i64);
    let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
    for (i, p) in points.iter().enumerate() {
        buckets.entry(cell(p)).or_default().push(i);
    }
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let (cx, cy) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = buckets.get(&(cx + dx, cy + dy)) {
                    for &j in list {
                        if j > i && p.dist(points[j]) < reach {
                            out.push((i, j));
                        }
                    }
                }
            }
        }
    }
    out
}

/// Whether some droplet cluster joins the sides `y = y0` and `y = y1` of
/// `rect` (discs of radius `p delta` around points inside `rect`).
pub fn droplet_crossing_vertical(points: &[Point], rect: &Rect, p: f64, delta: f64) -> bool {
    let labels = droplet_components(points, p, delta);
    let rad = p * delta;
    let bottom: HashSet<usize> = points
        .iter()
        .enumerate()
        .filter(|(_, q)| q.y - rect.y0 < rad)
        .map(|(i, _)| labels[i])
        .collect();
    points
        .iter()
        .enumerate()
        .any(|(i, q)| rect.y1 - q.y < rad && bottom.contains(&labels[i]))
}

/// Crossing target for vacant percolation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum VacantTarget {
    /// Left side to right side of the rectangle.
    LeftRight(Rect),
    /// Top side to bottom side of the rectangle.
    TopBottom(Rect),
    /// Inner circle to outer circle.
    Annulus { center: Point, r: f64, outer: f64 },
}

/// Whether a curve inside the target region joins its two designated
/// boundary pieces while keeping distance at least `p delta` from every
/// point. The curve is searched along the Voronoi diagram, clipped to the
/// region, with the region boundary itself usable where it is vacant.
pub fn vacant_crossing_exists(points: &[Point], p: f64, delta: f64, target: VacantTarget) -> Result<bool> {
    match target {
        VacantTarget::LeftRight(rect) => vacant_lr(points, p * delta, &rect),
        VacantTarget::TopBottom(rect) => {
            let flipped: Vec<Point> = points.iter().map(|q| Point::new(q.y, q.x)).collect();
            vacant_lr(&flipped, p * delta, &Rect::new(rect.y0, rect.x0, rect.y1, rect.x1))
        }
        VacantTarget::Annulus { center, r, outer } => {
            if !(r > 0.0 && outer > r) {
                return Err(Error::InvalidGeometry(format!("need 0 < r < R, got {r}, {outer}")));
            }
            vacant_annulus(points, p * delta, center, r, outer)
        }
    }
}

const LEFT: usize = 0;
const RIGHT: usize = 1;

fn vacant_lr(points: &[Point], clearance: f64, rect: &Rect) -> Result<bool> {
    if rect.is_empty() {
        return Err(Error::InvalidGeometry("empty rectangle".into()));
    }
    if points.is_empty() {
        return Ok(true);
    }
    let vor = Voronoi::new(points, rect)?;
    let base = 2;
    let mut next = base + vor.vertices.len();
    let mut links: Vec<(usize, usize)> = Vec::new();
    // (x, node) along the bottom and top sides
    let mut bottom = vec![(rect.x0, LEFT), (rect.x1, RIGHT)];
    let mut top = vec![(rect.x0, LEFT), (rect.x1, RIGHT)];
    let eps = 1e-12 * (rect.width() + rect.height());
    for e in &vor.edges {
        let (a, b) = (vor.vertices[e.ends[0]], vor.vertices[e.ends[1]]);
        let Some((t0, t1)) = clip_segment(a, b, rect) else { continue };
        let (pa, pb) = (a + (b - a) * t0, a + (b - a) * t1);
        // Every crossing of the top or bottom side splits it into cells,
        // vacant or not.
        let mut boundary_node = |q: Point| -> usize {
            if (q.x - rect.x0).abs() <= eps {
                return LEFT;
            }
            if (q.x - rect.x1).abs() <= eps {
                return RIGHT;
            }
            let id = next;
            next += 1;
            if (q.y - rect.y0).abs() <= eps {
                bottom.push((q.x, id));
            } else {
                top.push((q.x, id));
            }
            id
        };
        let u = if t0 == 0.0 { base + e.ends[0] } else { boundary_node(pa) };
        let v = if t1 == 1.0 { base + e.ends[1] } else { boundary_node(pb) };
        if vor.clearance(e, pa, pb) < clearance {
            continue;
        }
        links.push((u, v));
    }
    for (side, y) in [(&mut bottom, rect.y0), (&mut top, rect.y1)] {
        side.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in side.windows(2) {
            let (qa, qb) = (Point::new(w[0].0, y), Point::new(w[1].0, y));
            let owner = vor.site(vor.nearest_site(qa.midpoint(qb)));
            if point_segment_distance(owner, qa, qb) >= clearance {
                links.push((w[0].1, w[1].1));
            }
        }
    }
    let mut d = DisjointSets::new(next);
    for (u, v) in links {
        d.union(u, v);
    }
    Ok(d.same(LEFT, RIGHT))
}

/// Parameter interval `[t0, t1]` of the part of `a + t (b - a)` inside `rect`.
fn clip_segment(a: Point, b: Point, rect: &Rect) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    let d = b - a;
    for (p, q) in [
        (-d.x, a.x - rect.x0),
        (d.x, rect.x1 - a.x),
        (-d.y, a.y - rect.y0),
        (d.y, rect.y1 - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let t = q / p;
            if p < 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Roots of `|a + t d - c|^2 = rho^2`, ascending, if real.
fn circle_params(a: Point, d: Point, c: Point, rho: f64) -> Option<(f64, f64)> {
    let f = a - c;
    let qa = d.dot(d);
    if qa == 0.0 {
        return None;
    }
    let qb = 2.0 * f.dot(d);
    let qc = f.dot(f) - rho * rho;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)))
}

const INNER: usize = 0;
const OUTER: usize = 1;

fn vacant_annulus(points: &[Point], clearance: f64, c: Point, r: f64, outer: f64) -> Result<bool> {
    if points.is_empty() {
        return Ok(true);
    }
    let frame = Rect::new(c.x - outer, c.y - outer, c.x + outer, c.y + outer);
    let vor = Voronoi::new(points, &frame)?;
    let base = 2;
    let mut d = DisjointSets::new(base + vor.vertices.len());
    for e in &vor.edges {
        let (a, b) = (vor.vertices[e.ends[0]], vor.vertices[e.ends[1]]);
        let dir = b - a;
        // interval inside the outer disc
        let Some((o0, o1)) = circle_params(a, dir, c, outer) else { continue };
        let (lo, hi) = (o0.max(0.0), o1.min(1.0));
        if lo > hi {
            continue;
        }
        // remove the open interval inside the inner disc
        let mut pieces = Vec::with_capacity(2);
        match circle_params(a, dir, c, r) {
            Some((i0, i1)) if i0 < hi && i1 > lo => {
                if lo < i0 {
                    pieces.push((lo, i0, false, true));
                }
                if i1 < hi {
                    pieces.push((i1, hi, true, false));
                }
            }
            _ => pieces.push((lo, hi, false, false)),
        }
        for (s0, s1, start_inner, end_inner) in pieces {
            let (pa, pb) = (a + dir * s0, a + dir * s1);
            if vor.clearance(e, pa, pb) < clearance {
                continue;
            }
            let end = |s: f64, at_inner: bool, own: usize, t_end: f64| {
                if at_inner {
                    INNER
                } else if s == t_end {
                    base + own
                } else {
                    OUTER
                }
            };
            let u = end(s0, start_inner, e.ends[0], 0.0);
            let v = end(s1, end_inner, e.ends[1], 1.0);
            d.union(u, v);
        }
    }
    Ok(d.same(INNER, OUTER))
}

/// Clearance between tree edges and vacant dual paths. For every tree edge
/// `b = {x, y}` and each endpoint `z` of its dual Voronoi edge through which
/// a `p`-vacant dual path can pass while avoiding `b*` (both other Voronoi
/// edges at `z` are `p`-vacant, i.e. `z` is the circumcentre of `x`, `y`
/// and a third point `w` with `|xw|, |yw| >= 2 p delta`), the distance from
/// `z` to `b` must be at least `threshold`. Distances from the endpoints of
/// `b` to vacant segments are at least `p delta` by construction.
pub fn check_vacant_separation(
    sample: &EstSample,
    p: f64,
    delta: f64,
    threshold: f64,
) -> Result<CheckReport> {
    let pts = sample.graph.points();
    let vor = Voronoi::new(pts, &bounding_rect(pts))?;
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); vor.vertices.len()];
    let mut by_pair = std::collections::HashMap::with_capacity(vor.edges.len());
    for (i, e) in vor.edges.iter().enumerate() {
        for &z in &e.ends {
            incident[z].push(i);
        }
        let [a, b] = e.sites;
        by_pair.insert((a.min(b), a.max(b)), i);
    }
    let mut report = CheckReport::default();
    for &t in sample.tree.edges() {
        let edge = sample.graph.edge(t);
        let (Some(x), Some(y)) = (sample.graph.point(edge.a), sample.graph.point(edge.b)) else {
            continue;
        };
        let Some(&dual) = by_pair.get(&(edge.a.min(edge.b), edge.a.max(edge.b))) else {
            continue;
        };
        for &z in &vor.edges[dual].ends {
            let through = incident[z]
                .iter()
                .filter(|&&i| i != dual && vor.is_dual_vacant(&vor.edges[i], p, delta))
                .count();
            if through < 2 {
                continue;
            }
            report.checked += 1;
            if point_segment_distance(vor.vertices[z], x, y) < threshold {
                report.violations.push(t);
            }
        }
    }
    Ok(report)
}

fn bounding_rect(points: &[Point]) -> Rect {
    let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        r.x0 = r.x0.min(p.x);
        r.y0 = r.y0.min(p.y);
        r.x1 = r.x1.max(p.x);
        r.y1 = r.y1.max(p.y);
    }
    if points.is_empty() {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    } else {
        r
    }
}

/// The smallest `p` at which droplets around `points` join the left and
/// right sides of `rect`: a minimax path over pair thresholds
/// `|x - y| / (2 delta)` and side thresholds `dist(x, side) / delta`.
/// Crossing holds exactly for `p` strictly above the returned value.
pub fn droplet_critical_p(points: &[Point], rect: &Rect, delta: f64) -> Result<f64> {
    let n = points.len();
    if n == 0 {
        return Ok(f64::INFINITY);
    }
    let (left, right) = (n, n + 1);
    let mut arcs: Vec<(f64, usize, usize)> = delaunay_edges(points)?
        .into_iter()
        .map(|(a, b)| (points[a].dist(points[b]) / (2.0 * delta), a, b))
        .collect();
    for (v, q) in points.iter().enumerate() {
        arcs.push(((q.x - rect.x0) / delta, v, left));
        arcs.push(((rect.x1 - q.x) / delta, v, right));
    }
    arcs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut d = DisjointSets::new(n + 2);
    for (w, a, b) in arcs {
        d.union(a, b);
        if d.same(left, right) {
            return Ok(w);
        }
    }
    Ok(f64::INFINITY)
}

/// Estimate of the droplet radius parameter at which the left-right
/// crossing probability of `rect` is one half.
#[derive(Clone, Debug)]
pub struct DropletPc {
    pub record: EstimateRecord,
    /// `(p, empirical crossing probability)` at every bisection step.
    pub trace: Vec<(f64, f64)>,
    /// Per-sample critical values, sorted.
    pub thresholds: Vec<f64>,
}

/// Bisection of the empirical crossing probability. All probes share the
/// same samples (the monotone coupling in `p`), so the trace is monotone.
/// The interval comes from binomial order statistics around the median.
pub fn estimate_droplet_pc(rect: &Rect, delta: f64, n_samples: u64, seed: u64) -> Result<DropletPc> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let mut thresholds = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed_stream(seed, i);
            let pts = sample_poisson(Region::Rect(*rect), delta, &mut rng)?;
            droplet_critical_p(&pts.points, rect, delta)
        })
        .collect::<Result<Vec<f64>>>()?;
    thresholds.sort_by(|a, b| a.total_cmp(b));
    let n = thresholds.len();
    let crossing = |p: f64| thresholds.partition_point(|&t| t < p) as f64 / n as f64;
    let finite_max = thresholds.iter().rev().find(|t| t.is_finite()).copied().unwrap_or(1.0);
    let (mut lo, mut hi) = (0.0, finite_max + 1.0);
    let mut trace = Vec::new();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let f = crossing(mid);
        trace.push((mid, f));
        if f >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let z = z_two_sided(0.95);
    let half = 0.5 * z * (n as f64).sqrt();
    let j = ((0.5 * n as f64 - half).floor().max(0.0)) as usize;
    let k = ((0.5 * n as f64 + half).ceil() as usize).min(n - 1);
    let record = EstimateRecord {
        model: Model::Droplet,
        observable: "p_c".into(),
        geometry: GeometryKind::Rectangle,
        r: rect.width(),
        outer: rect.height(),
        k: 1,
        delta,
        bc_inner: Boundary::Free,
        bc_outer: Boundary::Free,
        n_samples,
        successes: (n / 2) as u64,
        p_hat: hi,
        ci_low: thresholds[j].min(hi),
        ci_high: thresholds[k].max(hi),
        seed,
    };
    Ok(DropletPc {
        record,
        trace,
        thresholds,
    })
}
