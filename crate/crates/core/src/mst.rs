//! Minimal spanning trees driven by i.i.d. call numbers, the invasion
//! construction, and the deterministic couplings with Bernoulli
//! percolation: vacancy cycles, the dual tree, free/wired bracketing and
//! free/wired factorisation across a cut.

use crate::error::{Error, Result};
use crate::geom::{Point, Rect};
use crate::grid::{build_lattice_box, Boundary, LatticeRegion, RegionGraph, Side, Site};
use crate::unionfind::DisjointSets;
use crate::ust::SpanningTree;
use rand::Rng;
use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Deref;

/// One uniform `[0, 1]` value per edge. Ties (which have probability zero)
/// are broken by edge index everywhere in this module.
#[derive(Clone, Debug, PartialEq)]
pub struct CallNumbers(Vec<f64>);

impl CallNumbers {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("call number {v} outside [0, 1]")));
        }
        Ok(CallNumbers(values))
    }

    /// `u_{b*} = 1 - u_b`, indexed by the dual graph's edges.
    pub fn dual(&self, dual_graph: &RegionGraph) -> Result<CallNumbers> {
        let map = dual_graph
            .dual_map()
            .ok_or_else(|| Error::NoDual("dual graph has no edge correspondence".into()))?;
        Ok(CallNumbers(map.iter().map(|&e| 1.0 - self.0[e]).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for CallNumbers {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub fn draw_call_numbers<R: Rng + ?Sized>(g: &RegionGraph, rng: &mut R) -> CallNumbers {
    CallNumbers((0..g.num_edges()).map(|_| rng.gen::<f64>()).collect())
}

/// Edge indices sorted by increasing weight, ties by index.
pub fn edge_order(weights: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..weights.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        weights[a as usize]
            .total_cmp(&weights[b as usize])
            .then(a.cmp(&b))
    });
    order
}

/// Kruskal's algorithm: the unique minimal spanning tree for `weights`
/// (call numbers, or Euclidean lengths for EST).
pub fn kruskal_mst(g: &RegionGraph, weights: &[f64]) -> Result<SpanningTree> {
    let edges = kruskal_edges(g, weights);
    if edges.len() + 1 != g.num_vertices() {
        return Err(Error::Disconnected {
            components: g.num_vertices() - edges.len(),
        });
    }
    let root = g.wired_vertex().unwrap_or(0);
    SpanningTree::from_edges(g, &edges, root)
}

/// Edges accepted by Kruskal's scan (a spanning forest on disconnected input).
pub fn kruskal_edges(g: &RegionGraph, weights: &[f64]) -> Vec<usize> {
    assert_eq!(weights.len(), g.num_edges(), "one weight per edge");
    let mut d = DisjointSets::new(g.num_vertices());
    let mut out = Vec::with_capacity(g.num_vertices().saturating_sub(1));
    for e in edge_order(weights) {
        let edge = g.edge(e as usize);
        if d.union(edge.a, edge.b) {
            out.push(e as usize);
            if out.len() + 1 == g.num_vertices() {
                break;
            }
        }
    }
    out
}

/// Invasion from `root`: repeatedly adjoin the cheapest edge leaving the
/// invaded cluster. Produces the same tree as [`kruskal_mst`].
pub fn invasion_tree(g: &RegionGraph, weights: &[f64], root: usize) -> Result<SpanningTree> {
    let n = g.num_vertices();
    let mut invaded = vec![false; n];
    let mut heap = BinaryHeap::new();
    let push_frontier = |v: usize, invaded: &[bool], heap: &mut BinaryHeap<_>| {
        for &(u, e) in g.neighbors(v) {
            if !invaded[u as usize] {
                heap.push(Reverse((OrdF64(weights[e as usize]), e)));
            }
        }
    };
    invaded[root] = true;
    push_frontier(root, &invaded, &mut heap);
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    while let Some(Reverse((_, e))) = heap.pop() {
        let edge = g.edge(e as usize);
        let fresh = match (invaded[edge.a], invaded[edge.b]) {
            (true, false) => edge.b,
            (false, true) => edge.a,
            _ => continue,
        };
        invaded[fresh] = true;
        edges.push(e as usize);
        push_frontier(fresh, &invaded, &mut heap);
    }
    if edges.len() + 1 != n {
        return Err(Error::Disconnected {
            components: n - edges.len(),
        });
    }
    SpanningTree::from_edges(g, &edges, root)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Edges with `u_b < p`.
pub fn occupied_subgraph(u: &[f64], p: f64) -> Vec<usize> {
    (0..u.len()).filter(|&e| u[e] < p).collect()
}

/// Result of a deterministic coupling check: how many items were examined
/// and which ones violated the property.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    pub checked: usize,
    pub violations: Vec<usize>,
}

impl CheckReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.checked += other.checked;
        self.violations.extend(other.violations);
    }
}

/// For every edge left out of the minimal spanning tree, confirms that its
/// endpoints are already joined (possibly through the wired vertex) by edges
/// of smaller call number. Violations list the offending vacant edges.
pub fn verify_vacancy_cycle_property(
    g: &RegionGraph,
    u: &[f64],
    t: &SpanningTree,
) -> Result<CheckReport> {
    let mut mst = kruskal_edges(g, u);
    mst.sort_unstable();
    if mst != t.edges() {
        return Err(Error::NotMinimal);
    }
    let mut report = CheckReport::default();
    let mut d = DisjointSets::new(g.num_vertices());
    for e in edge_order(u) {
        let edge = g.edge(e as usize);
        let joined = d.same(edge.a, edge.b);
        if !t.contains_edge(e as usize) {
            report.checked += 1;
            if !joined {
                report.violations.push(e as usize);
            }
        }
        d.union(edge.a, edge.b);
    }
    Ok(report)
}

/// Checks that the duals of the edges left out of the primal minimal tree are
/// exactly the minimal spanning tree of the dual graph under `1 - u`.
pub fn dual_mst_check(primal: &RegionGraph, dual: &RegionGraph, u: &[f64]) -> Result<CheckReport> {
    let map = primal
        .dual_map()
        .ok_or_else(|| Error::NoDual("primal graph has no dual attached".into()))?;
    let tree = kruskal_mst(primal, u)?;
    let du: Vec<f64> = dual
        .dual_map()
        .ok_or_else(|| Error::NoDual("dual graph has no edge correspondence".into()))?
        .iter()
        .map(|&e| 1.0 - u[e])
        .collect();
    let dual_tree = kruskal_mst(dual, &du)?;
    let mut report = CheckReport::default();
    for (e, &d) in map.iter().enumerate() {
        report.checked += 1;
        if tree.contains_edge(e) == dual_tree.contains_edge(d) {
            report.violations.push(e);
        }
    }
    Ok(report)
}

/// Call numbers of `target` copied from `source` by lattice edge identity:
/// interior edges keep their value, an edge into `target`'s wired vertex
/// takes the value of the lattice edge it replaces, or 0 if that edge leaves
/// the source region altogether.
pub fn restrict_call_numbers(
    source: &RegionGraph,
    u: &[f64],
    target: &RegionGraph,
) -> Result<Vec<f64>> {
    let keys = source.edge_index_by_key();
    target
        .edges()
        .iter()
        .map(|e| {
            let key = e
                .key
                .ok_or_else(|| Error::InvalidArgument("target is not a lattice graph".into()))?;
            match keys.get(&key) {
                Some(&i) => Ok(u[i]),
                // A stub into the wired vertex with no counterpart: the
                // boundary it leads to is already contracted in the source.
                None if Some(e.b) == target.wired_vertex() => Ok(0.0),
                None => Err(Error::InvalidGeometry(format!(
                    "edge {key:?} is not part of the source region"
                ))),
            }
        })
        .collect()
}

/// Which edges of `tree` on `g` lie in `interior`, as lattice keys.
fn interior_tree_keys(
    g: &RegionGraph,
    tree: &SpanningTree,
    interior: &dyn Fn(Point) -> bool,
) -> std::collections::HashSet<crate::grid::LatticeKey> {
    tree.edges()
        .iter()
        .filter_map(|&e| {
            let edge = g.edge(e);
            match (g.point(edge.a), g.point(edge.b)) {
                (Some(a), Some(b)) if interior(a) && interior(b) => edge.key,
                _ => None,
            }
        })
        .collect()
}

/// Counts interior edges of `smaller` missing from `larger`.
fn containment(
    smaller: &std::collections::HashSet<crate::grid::LatticeKey>,
    larger: &std::collections::HashSet<crate::grid::LatticeKey>,
    report: &mut CheckReport,
    offset: usize,
) {
    let mut keys: Vec<_> = smaller.iter().collect();
    keys.sort_unstable();
    for (i, k) in keys.into_iter().enumerate() {
        report.checked += 1;
        if !larger.contains(k) {
            report.violations.push(offset + i);
        }
    }
}

/// Free/wired bracketing on the sub-box `sub`: with shared call numbers,
/// `wired tree ⊆ full tree ⊆ free tree` on edges whose endpoints lie strictly
/// inside `sub`.
pub fn bracketing_check(g: &RegionGraph, u: &[f64], sub: &Rect) -> Result<CheckReport> {
    let delta = g
        .delta()
        .ok_or_else(|| Error::InvalidArgument("bracketing needs a lattice graph".into()))?;
    let free = build_lattice_box(delta, sub, Boundary::Free)?;
    let wired = build_lattice_box(delta, sub, Boundary::Wired)?;
    let u_free = restrict_call_numbers(g, u, &free)?;
    let u_wired = restrict_call_numbers(g, u, &wired)?;
    bracketing_from_parts(g, u, (&free, &u_free), (&wired, &u_wired), sub)
}

/// Bracketing with caller-supplied call numbers on the sub-box copies (the
/// negative control feeds mismatched values here).
pub fn bracketing_from_parts(
    g: &RegionGraph,
    u: &[f64],
    (free, u_free): (&RegionGraph, &[f64]),
    (wired, u_wired): (&RegionGraph, &[f64]),
    sub: &Rect,
) -> Result<CheckReport> {
    let full_tree = kruskal_mst(g, u)?;
    let free_tree = kruskal_mst(free, u_free)?;
    let wired_tree = kruskal_mst(wired, u_wired)?;
    let inside = |p: Point| sub.contains_strictly(p);
    let full_keys = interior_tree_keys(g, &full_tree, &inside);
    let free_keys = interior_tree_keys(free, &free_tree, &inside);
    let wired_keys = interior_tree_keys(wired, &wired_tree, &inside);
    let mut report = CheckReport::default();
    containment(&wired_keys, &full_keys, &mut report, 0);
    containment(&full_keys, &free_keys, &mut report, 1 << 32);
    Ok(report)
}

/// The two sides of a circular cut through a lattice region: the inner part
/// with a free boundary along the cut and the outer part with a wired one.
pub struct CutRegions {
    pub inner_free: Option<RegionGraph>,
    pub outer_wired: Option<RegionGraph>,
}

pub fn split_at_circle(g: &RegionGraph, center: Point, radius: f64) -> Result<CutRegions> {
    let lattice: &LatticeRegion = g
        .lattice()
        .ok_or_else(|| Error::InvalidArgument("factorisation needs a lattice graph".into()))?;
    let inner = lattice.map_kept(|p| {
        if p.dist(center) <= radius {
            Site::Kept
        } else {
            Site::Removed(Side::Outer)
        }
    });
    let outer = lattice.map_kept(|p| {
        if p.dist(center) <= radius {
            Site::Wired(Side::Inner)
        } else {
            Site::Kept
        }
    });
    let build = |r: LatticeRegion| match r.to_graph() {
        Ok(g) => Ok(Some(g)),
        Err(Error::Empty) => Ok(None),
        Err(e) => Err(e),
    };
    Ok(CutRegions {
        inner_free: build(inner)?,
        outer_wired: build(outer)?,
    })
}

/// Free/wired factorisation across the circle `|x - center| = radius`:
/// the free tree of the inner part dominates the full tree inside, and the
/// wired tree of the outer part is dominated by the full tree outside.
pub fn fw_factorization_sample(
    g: &RegionGraph,
    u: &[f64],
    center: Point,
    radius: f64,
) -> Result<CheckReport> {
    let parts = split_at_circle(g, center, radius)?;
    let full_tree = kruskal_mst(g, u)?;
    let mut report = CheckReport::default();
    if let Some(inner) = &parts.inner_free {
        let ui = restrict_call_numbers(g, u, inner)?;
        let t = kruskal_forest_tree(inner, &ui);
        let inside = |p: Point| p.dist(center) < radius;
        let full = interior_tree_keys(g, &full_tree, &inside);
        let part = interior_keys_of(inner, &t, &inside);
        containment(&full, &part, &mut report, 0);
    }
    if let Some(outer) = &parts.outer_wired {
        let uo = restrict_call_numbers(g, u, outer)?;
        let t = kruskal_forest_tree(outer, &uo);
        let outside = |p: Point| p.dist(center) > radius;
        let full = interior_tree_keys(g, &full_tree, &outside);
        let part = interior_keys_of(outer, &t, &outside);
        containment(&part, &full, &mut report, 1 << 32);
    }
    Ok(report)
}

// The inner piece of a cut can be disconnected (e.g. a cut grazing a
// boundary); its free forest is still the right comparison object.
fn kruskal_forest_tree(g: &RegionGraph, u: &[f64]) -> Vec<usize> {
    kruskal_edges(g, u)
}

fn interior_keys_of(
    g: &RegionGraph,
    edges: &[usize],
    interior: &dyn Fn(Point) -> bool,
) -> std::collections::HashSet<crate::grid::LatticeKey> {
    edges
        .iter()
        .filter_map(|&e| {
            let edge = g.edge(e);
            match (g.point(edge.a), g.point(edge.b)) {
                (Some(a), Some(b)) if interior(a) && interior(b) => edge.key,
                _ => None,
            }
        })
        .collect()
}
