//! Finite planar region graphs: lattice boxes and annuli with free or wired
//! boundary conditions, and their planar duals.
//!
//! Lattice graphs are described by a [`LatticeRegion`], a classification of
//! the sites of `δZ²` (or of the shifted lattice `δZ² + (δ/2, δ/2)`) into
//! kept vertices, sites merged into the wired vertex, and removed sites. The
//! planar dual of such a graph is again a lattice region on the shifted
//! lattice, which is how [`planar_dual`] is computed.

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};
use crate::unionfind::DisjointSets;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};

/// Boundary condition on one side of a region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Boundary {
    Free,
    Wired,
}

/// Inner or outer side of an annulus; boxes and discs only have an outer side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Inner,
    Outer,
}

/// The closed shell `r <= |x - center| <= outer` with boundary conditions.
/// `r == 0` denotes the disc of radius `outer`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    pub center: Point,
    pub r: f64,
    pub outer: f64,
    pub bc_inner: Boundary,
    pub bc_outer: Boundary,
}

impl AnnulusSpec {
    pub fn new(
        center: Point,
        r: f64,
        outer: f64,
        bc_inner: Boundary,
        bc_outer: Boundary,
    ) -> Result<Self> {
        if !(r >= 0.0 && outer > r && outer.is_finite()) {
            return Err(Error::InvalidGeometry(format!(
                "annulus needs 0 <= r < R, got r={r}, R={outer}"
            )));
        }
        Ok(AnnulusSpec {
            center,
            r,
            outer,
            bc_inner,
            bc_outer,
        })
    }

    /// Free inner boundary, wired outer boundary: the `D(r, R)` of the
    /// mixed-boundary crossing exponents.
    pub fn free_wired(center: Point, r: f64, outer: f64) -> Result<Self> {
        Self::new(center, r, outer, Boundary::Free, Boundary::Wired)
    }

    pub fn aspect(&self) -> f64 {
        self.outer / self.r
    }

    pub fn contains(&self, p: Point) -> bool {
        let d = p.dist(self.center);
        d >= self.r && d <= self.outer
    }

    pub fn bc(&self, side: Side) -> Boundary {
        match side {
            Side::Inner => self.bc_inner,
            Side::Outer => self.bc_outer,
        }
    }
}

/// Canonical identity of a lattice edge: its two endpoints in doubled
/// integer coordinates (`position = δ/2 * coords`), smaller first. For an
/// edge into the wired vertex the second endpoint is the merged-away site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeKey(pub [i64; 2], pub [i64; 2]);

impl LatticeKey {
    pub fn new(p: [i64; 2], q: [i64; 2]) -> Self {
        if p <= q {
            LatticeKey(p, q)
        } else {
            LatticeKey(q, p)
        }
    }

    /// Key of the dual edge crossing this one (perpendicular bisector).
    pub fn dual(&self) -> LatticeKey {
        let (p, q) = (self.0, self.1);
        let mid = [(p[0] + q[0]) / 2, (p[1] + q[1]) / 2];
        if p[1] == q[1] {
            LatticeKey::new([mid[0], mid[1] - 1], [mid[0], mid[1] + 1])
        } else {
            LatticeKey::new([mid[0] - 1, mid[1]], [mid[0] + 1, mid[1]])
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
    pub key: Option<LatticeKey>,
}

impl Edge {
    pub fn new(a: usize, b: usize, length: f64) -> Self {
        Edge {
            a,
            b,
            length,
            key: None,
        }
    }

    pub fn other(&self, v: usize) -> usize {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Classification of a lattice site.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Site {
    Kept,
    /// Merged into the wired vertex.
    Wired(Side),
    /// Deleted (free boundary beyond this site).
    Removed(Side),
}

/// A finite classification of a square lattice (unit `delta`) plus a
/// constant classification of everything outside the stored window.
#[derive(Clone, Debug)]
pub struct LatticeRegion {
    delta: f64,
    /// 0 for `δZ²`, 1 for `δZ² + (δ/2, δ/2)`.
    parity: i64,
    i0: i64,
    j0: i64,
    nx: usize,
    ny: usize,
    sites: Vec<Site>,
    exterior: Site,
}

impl LatticeRegion {
    /// Classifies the window `[i0, i1] x [j0, j1]` (lattice steps) with `f`.
    pub fn from_fn(
        delta: f64,
        parity: i64,
        (i0, i1): (i64, i64),
        (j0, j1): (i64, i64),
        exterior: Site,
        mut f: impl FnMut(Point) -> Site,
    ) -> Self {
        let nx = (i1 - i0 + 1).max(0) as usize;
        let ny = (j1 - j0 + 1).max(0) as usize;
        let mut sites = Vec::with_capacity(nx * ny);
        for j in j0..=j1 {
            for i in i0..=i1 {
                sites.push(f(position(delta, parity, i, j)));
            }
        }
        LatticeRegion {
            delta,
            parity,
            i0,
            j0,
            nx,
            ny,
            sites,
            exterior,
        }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn parity(&self) -> i64 {
        self.parity
    }

    pub fn site(&self, i: i64, j: i64) -> Site {
        let (di, dj) = (i - self.i0, j - self.j0);
        if di < 0 || dj < 0 || di as usize >= self.nx || dj as usize >= self.ny {
            self.exterior
        } else {
            self.sites[dj as usize * self.nx + di as usize]
        }
    }

    pub fn position(&self, i: i64, j: i64) -> Point {
        position(self.delta, self.parity, i, j)
    }

    pub fn doubled(&self, i: i64, j: i64) -> [i64; 2] {
        [2 * i + self.parity, 2 * j + self.parity]
    }

    /// Reclassifies kept sites with `f(position, current) -> new`, keeping
    /// the window and exterior.
    pub fn map_kept(&self, mut f: impl FnMut(Point) -> Site) -> LatticeRegion {
        let mut out = self.clone();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let idx = j * self.nx + i;
                if self.sites[idx] == Site::Kept {
                    out.sites[idx] = f(self.position(self.i0 + i as i64, self.j0 + j as i64));
                }
            }
        }
        out
    }

    /// The region of faces: cells of this lattice, classified so that the
    /// resulting graph is the planar dual of [`LatticeRegion::to_graph`].
    pub fn dual(&self) -> Result<LatticeRegion> {
        let exterior = match self.exterior {
            Site::Removed(s) => Site::Wired(s),
            Site::Wired(s) => Site::Removed(s),
            Site::Kept => return Err(Error::NoDual("region is unbounded".into())),
        };
        let p = self.parity;
        // Dual site (a, b) has lower-left corner (a - p, b - p).
        let (a0, b0) = (self.i0 - 1 + p, self.j0 - 1 + p);
        let (nx, ny) = (self.nx + 1, self.ny + 1);
        let mut sites = Vec::with_capacity(nx * ny);
        for b in b0..b0 + ny as i64 {
            for a in a0..a0 + nx as i64 {
                let (ci, cj) = (a - p, b - p);
                let corners = [
                    self.site(ci, cj),
                    self.site(ci + 1, cj),
                    self.site(ci, cj + 1),
                    self.site(ci + 1, cj + 1),
                ];
                sites.push(classify_cell(&corners)?);
            }
        }
        Ok(LatticeRegion {
            delta: self.delta,
            parity: 1 - p,
            i0: a0,
            j0: b0,
            nx,
            ny,
            sites,
            exterior,
        })
    }

    /// Builds the region graph: kept sites are vertices (row-major order),
    /// nearest-neighbour pairs of kept sites are edges, and every
    /// kept-to-wired lattice edge becomes a separate edge into the single
    /// wired vertex.
    pub fn to_graph(&self) -> Result<RegionGraph> {
        let mut index = vec![usize::MAX; self.nx * self.ny];
        let mut points = Vec::new();
        let mut coords = Vec::new();
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.sites[j * self.nx + i] == Site::Kept {
                    index[j * self.nx + i] = points.len();
                    let (gi, gj) = (self.i0 + i as i64, self.j0 + j as i64);
                    points.push(self.position(gi, gj));
                    coords.push((gi, gj));
                }
            }
        }
        if points.is_empty() {
            return Err(Error::Empty);
        }
        let n = points.len();
        let lookup = |i: i64, j: i64| -> usize {
            let (di, dj) = ((i - self.i0) as usize, (j - self.j0) as usize);
            index[dj * self.nx + di]
        };
        let mut edges = Vec::new();
        let mut wired_sides = [false; 2];
        let mut inner_free = Vec::new();
        let mut outer_free = Vec::new();
        for (v, &(i, j)) in coords.iter().enumerate() {
            let here = self.doubled(i, j);
            let mut free_side = [false; 2];
            for (di, dj) in [(1, 0), (0, 1), (-1, 0), (0, -1)] {
                let (ni, nj) = (i + di, j + dj);
                match self.site(ni, nj) {
                    Site::Kept => {
                        if di + dj > 0 {
                            edges.push(Edge {
                                a: v,
                                b: lookup(ni, nj),
                                length: self.delta,
                                key: Some(LatticeKey::new(here, self.doubled(ni, nj))),
                            });
                        }
                    }
                    Site::Wired(s) => {
                        wired_sides[side_index(s)] = true;
                        edges.push(Edge {
                            a: v,
                            b: n,
                            length: self.delta,
                            key: Some(LatticeKey::new(here, self.doubled(ni, nj))),
                        });
                    }
                    Site::Removed(s) => free_side[side_index(s)] = true,
                }
            }
            if free_side[0] {
                inner_free.push(v);
            }
            if free_side[1] {
                outer_free.push(v);
            }
        }
        let has_wired = wired_sides.iter().any(|&w| w);
        let mut g = RegionGraph::from_parts(points, has_wired, edges)?;
        g.wired_sides = wired_sides;
        g.inner_free = inner_free;
        g.outer_free = outer_free;
        g.lattice = Some(self.clone());
        Ok(g)
    }
}

fn side_index(s: Side) -> usize {
    match s {
        Side::Inner => 0,
        Side::Outer => 1,
    }
}

fn position(delta: f64, parity: i64, i: i64, j: i64) -> Point {
    let h = 0.5 * delta;
    Point::new((2 * i + parity) as f64 * h, (2 * j + parity) as f64 * h)
}

fn classify_cell(corners: &[Site; 4]) -> Result<Site> {
    let mut removed = None;
    let mut wired = None;
    let mut all_wired = true;
    for c in corners {
        match *c {
            Site::Removed(s) => {
                if removed.is_some_and(|r| r != s) {
                    return Err(Error::NoDual("a face touches two free boundaries".into()));
                }
                removed = Some(s);
                all_wired = false;
            }
            Site::Wired(s) => {
                if wired.is_some_and(|w| w != s) {
                    return Err(Error::NoDual("a face touches two wired boundaries".into()));
                }
                wired = Some(s);
            }
            Site::Kept => all_wired = false,
        }
    }
    match (removed, wired) {
        (Some(_), Some(_)) => Err(Error::NoDual(
            "a face touches both a free and a wired boundary".into(),
        )),
        (Some(s), None) => Ok(Site::Wired(s)),
        (None, Some(s)) if all_wired => Ok(Site::Removed(s)),
        _ => Ok(Site::Kept),
    }
}

/// A finite planar graph with vertex coordinates, an optional wired vertex
/// (which carries no coordinate and always has the last index), free
/// boundary tags, and an optional edge correspondence with a planar dual.
#[derive(Clone, Debug)]
pub struct RegionGraph {
    points: Vec<Point>,
    wired: Option<usize>,
    wired_sides: [bool; 2],
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    adjacency: Vec<(u32, u32)>,
    inner_free: Vec<usize>,
    outer_free: Vec<usize>,
    dual_map: Option<Vec<usize>>,
    lattice: Option<LatticeRegion>,
}

impl RegionGraph {
    /// Assembles a graph and checks the structural invariants: endpoints
    /// exist, no self-loops, and parallel edges only at the wired vertex.
    pub fn from_parts(points: Vec<Point>, has_wired: bool, edges: Vec<Edge>) -> Result<Self> {
        let n = points.len() + usize::from(has_wired);
        let wired = has_wired.then_some(points.len());
        let mut seen = HashSet::with_capacity(edges.len());
        let mut degree = vec![0usize; n];
        for (i, e) in edges.iter().enumerate() {
            if e.a >= n || e.b >= n {
                return Err(Error::MalformedGraph(format!("edge {i} has a missing endpoint")));
            }
            if e.a == e.b {
                return Err(Error::MalformedGraph(format!("edge {i} is a self-loop")));
            }
            let pair = (e.a.min(e.b), e.a.max(e.b));
            if !seen.insert(pair) && wired != Some(pair.1) {
                return Err(Error::MalformedGraph(format!(
                    "parallel edge {i} between {} and {} not at the wired vertex",
                    pair.0, pair.1
                )));
            }
            degree[e.a] += 1;
            degree[e.b] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut adjacency = vec![(0u32, 0u32); offsets[n]];
        for (i, e) in edges.iter().enumerate() {
            adjacency[fill[e.a]] = (e.b as u32, i as u32);
            fill[e.a] += 1;
            adjacency[fill[e.b]] = (e.a as u32, i as u32);
            fill[e.b] += 1;
        }
        Ok(RegionGraph {
            points,
            wired,
            wired_sides: [false, has_wired],
            edges,
            offsets,
            adjacency,
            inner_free: Vec::new(),
            outer_free: Vec::new(),
            dual_map: None,
            lattice: None,
        })
    }

    /// Sets the free-boundary tags and the side(s) the wired vertex stands for.
    pub fn with_boundaries(
        mut self,
        inner_free: Vec<usize>,
        outer_free: Vec<usize>,
        wired_sides: [bool; 2],
    ) -> Self {
        self.inner_free = inner_free;
        self.outer_free = outer_free;
        self.wired_sides = wired_sides;
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.points.len() + usize::from(self.wired.is_some())
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Coordinates of the non-wired vertices (indices `0..points().len()`).
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, v: usize) -> Option<Point> {
        self.points.get(v).copied()
    }

    pub fn wired_vertex(&self) -> Option<usize> {
        self.wired
    }

    /// Whether the wired vertex represents the given side of the region.
    pub fn is_wired(&self, side: Side) -> bool {
        self.wired.is_some() && self.wired_sides[side_index(side)]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    /// `(neighbour, edge index)` pairs, one per incident edge.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[(u32, u32)] {
        &self.adjacency[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn inner_free_boundary(&self) -> &[usize] {
        &self.inner_free
    }

    pub fn outer_free_boundary(&self) -> &[usize] {
        &self.outer_free
    }

    pub fn free_boundary(&self, side: Side) -> &[usize] {
        match side {
            Side::Inner => &self.inner_free,
            Side::Outer => &self.outer_free,
        }
    }

    /// Edge index of the dual edge crossing each edge, when a dual is attached.
    pub fn dual_map(&self) -> Option<&[usize]> {
        self.dual_map.as_deref()
    }

    pub fn lattice(&self) -> Option<&LatticeRegion> {
        self.lattice.as_ref()
    }

    pub fn delta(&self) -> Option<f64> {
        self.lattice.as_ref().map(|l| l.delta)
    }

    pub fn components(&self) -> usize {
        let mut d = DisjointSets::new(self.num_vertices());
        for e in &self.edges {
            d.union(e.a, e.b);
        }
        d.components()
    }

    pub fn is_connected(&self) -> bool {
        self.components() == 1
    }

    pub fn edge_index_by_key(&self) -> HashMap<LatticeKey, usize> {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.key.map(|k| (k, i)))
            .collect()
    }
}

/// Lattice points of `δZ²` in the closed shell of `spec`, nearest-neighbour
/// edges, with the requested boundary conditions on each side.
pub fn build_lattice_annulus(delta: f64, spec: &AnnulusSpec) -> Result<RegionGraph> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidGeometry(format!("delta must be positive, got {delta}")));
    }
    let tol = 1e-9 * delta;
    let side_site = |side: Side| match spec.bc(side) {
        Boundary::Free => Site::Removed(side),
        Boundary::Wired => Site::Wired(side),
    };
    let c = spec.center;
    let reach = spec.outer + 2.0 * delta;
    let window = |lo: f64, hi: f64| ((lo / delta).floor() as i64 - 1, (hi / delta).ceil() as i64 + 1);
    let region = LatticeRegion::from_fn(
        delta,
        0,
        window(c.x - reach, c.x + reach),
        window(c.y - reach, c.y + reach),
        side_site(Side::Outer),
        |p| {
            let d = p.dist(c);
            if d < spec.r - tol {
                side_site(Side::Inner)
            } else if d > spec.outer + tol {
                side_site(Side::Outer)
            } else {
                Site::Kept
            }
        },
    );
    let g = region.to_graph()?;
    let comps = g.components();
    if comps != 1 {
        return Err(Error::Disconnected { components: comps });
    }
    if spec.r > 0.0 && delta >= (spec.outer - spec.r) / 4.0 {
        return Err(Error::TooCoarse {
            delta,
            limit: format!("delta < (R - r)/4 = {}", (spec.outer - spec.r) / 4.0),
        });
    }
    Ok(g)
}

/// Induced nearest-neighbour graph on `δZ² ∩ rect`; a wired boundary adds
/// one edge to the wired vertex per deleted outside neighbour.
pub fn build_lattice_box(delta: f64, rect: &Rect, bc: Boundary) -> Result<RegionGraph> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidGeometry(format!("delta must be positive, got {delta}")));
    }
    if rect.is_empty() {
        return Err(Error::Empty);
    }
    let tol = 1e-9 * delta;
    let outside = match bc {
        Boundary::Free => Site::Removed(Side::Outer),
        Boundary::Wired => Site::Wired(Side::Outer),
    };
    let window = |lo: f64, hi: f64| ((lo / delta).floor() as i64 - 2, (hi / delta).ceil() as i64 + 2);
    let grown = Rect::new(rect.x0 - tol, rect.y0 - tol, rect.x1 + tol, rect.y1 + tol);
    let region = LatticeRegion::from_fn(
        delta,
        0,
        window(rect.x0, rect.x1),
        window(rect.y0, rect.y1),
        outside,
        |p| if grown.contains(p) { Site::Kept } else { outside },
    );
    region.to_graph()
}

/// Builds the planar dual of a lattice region graph and records the edge
/// correspondence on both graphs (`g.dual_map()[e]` is the dual edge
/// crossing `e`, and vice versa).
///
/// Faces adjacent to a free boundary merge into the dual's wired vertex;
/// faces surrounding a wired boundary become the dual's free boundary.
pub fn planar_dual(g: &mut RegionGraph) -> Result<RegionGraph> {
    let lattice = g
        .lattice
        .as_ref()
        .ok_or_else(|| Error::NoDual("graph has no lattice embedding".into()))?;
    let mut dual = lattice.dual()?.to_graph()?;
    let by_key = dual.edge_index_by_key();
    if by_key.len() != g.edges.len() {
        return Err(Error::NoDual(format!(
            "{} primal edges but {} dual edges (bridge or enclosed face)",
            g.edges.len(),
            by_key.len()
        )));
    }
    let mut forward = Vec::with_capacity(g.edges.len());
    for e in &g.edges {
        let key = e.key.expect("lattice edges carry keys").dual();
        match by_key.get(&key) {
            Some(&d) => forward.push(d),
            None => {
                return Err(Error::NoDual(format!("no dual edge crosses {:?}", e.key)));
            }
        }
    }
    let mut backward = vec![usize::MAX; forward.len()];
    for (e, &d) in forward.iter().enumerate() {
        backward[d] = e;
    }
    let euler = g.num_vertices() as i64 - g.num_edges() as i64 + dual.num_vertices() as i64;
    if euler != 2 {
        return Err(Error::NoDual(format!("Euler characteristic {euler} != 2")));
    }
    g.dual_map = Some(forward);
    dual.dual_map = Some(backward);
    Ok(dual)
}
