//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spantree_core::analysis::{
    crossing_stability, crossing_table, fit_exponent, geometric_decay_check, rectangle_traversal_probability, telescopic_compare,
};
use spantree_core::crossings::{max_disjoint_crossings, rectangle_crossed, CrossingQuery};
use spantree_core::est::{check_vacant_separation, estimate_droplet_pc, euclidean_mst, sample_poisson, PointSet, Region};
use spantree_core::fractal::{box_counting, cover_circle, dyadic_scales};
use spantree_core::geom::Rect;
use spantree_core::grid::{build_lattice_annulus, build_lattice_box, planar_dual, Edge};
use spantree_core::mst::{
    bracketing_check, draw_call_numbers, dual_mst_check, fw_factorization_sample, invasion_tree, kruskal_mst,
    verify_vacancy_cycle_property, CheckReport,
};
use spantree_core::stats::chi_square_pvalue;
use spantree_core::ust::{estimate_choking_probability, loop_erase, wilson_branches, wilson_ust};
use spantree_core::{AnnulusSpec, Boundary, Model, Point, RegionGraph};
use std::collections::HashMap;
use std::time::Instant;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- oracles

fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, extra: usize) -> RegionGraph {
    let pts: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
    let mut pairs: Vec<(usize, usize)> = (1..n).map(|v| (rng.gen_range(0..v), v)).collect();
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if a != b && !pairs.contains(&(a.min(b), a.max(b))) {
            pairs.push((a.min(b), a.max(b)));
        }
    }
    let edges = pairs.into_iter().map(|(a, b)| Edge::new(a, b, 1.0)).collect();
    RegionGraph::from_parts(pts, false, edges).unwrap()
}

/// Prim's algorithm on the complete graph; returns sorted index pairs.
fn complete_graph_emst(points: &[Point]) -> Vec<(usize, usize)> {
    let n = points.len();
    let mut in_tree = vec![false; n];
    let mut best = vec![(f64::INFINITY, usize::MAX); n];
    in_tree[0] = true;
    for v in 1..n {
        best[v] = (points[0].dist(points[v]), 0);
    }
    let mut out = Vec::new();
    for _ in 1..n {
        let v = (0..n)
            .filter(|&v| !in_tree[v])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0))
            .unwrap();
        in_tree[v] = true;
        let u = best[v].1;
        out.push((u.min(v), u.max(v)));
        for w in 0..n {
            let d = points[v].dist(points[w]);
            if !in_tree[w] && d < best[w].0 {
                best[w] = (d, v);
            }
        }
    }
    out.sort_unstable();
    out
}

/// Maximum family of vertex-disjoint source-to-sink paths by exhaustive search.
fn exhaustive_disjoint_paths(q: &CrossingQuery) -> usize {
    let mut adj = vec![Vec::new(); q.num_vertices];
    for &[a, b] in &q.edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    for &[a, b] in &q.arcs {
        adj[a].push(b);
    }
    let mut paths: Vec<u32> = Vec::new();
    fn extend(v: usize, mask: u32, adj: &[Vec<usize>], q: &CrossingQuery, out: &mut Vec<u32>) {
        if q.sinks.contains(&v) {
            out.push(mask);
            return;
        }
        for &w in &adj[v] {
            if mask >> w & 1 == 0 && !q.sources.contains(&w) {
                extend(w, mask | 1 << w, adj, q, out);
            }
        }
    }
    for &s in &q.sources {
        extend(s, 1 << s, &adj, q, &mut paths);
    }
    let shared: u32 = q.unbounded.iter().map(|&v| 1u32 << v).sum();
    paths.sort_unstable();
    paths.dedup();
    fn best(i: usize, used: u32, paths: &[u32], shared: u32) -> usize {
        if i == paths.len() {
            return 0;
        }
        let skip = best(i + 1, used, paths, shared);
        if paths[i] & used & !shared == 0 {
            skip.max(1 + best(i + 1, used | paths[i], paths, shared))
        } else {
            skip
        }
    }
    best(0, 0, &paths, shared)
}

/// Loop erasure by repeatedly removing the first loop found.
fn reference_loop_erase(walk: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    for &v in walk {
        if let Some(i) = out.iter().position(|&x| x == v) {
            out.truncate(i + 1);
        } else {
            out.push(v);
        }
    }
    out
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut bad = Vec::new();
    for _ in 0..1000 {
        let n = rng.gen_range(2..40);
        let extra = rng.gen_range(0..2 * n);
        let g = random_connected_graph(&mut rng, n, extra);
        let u: Vec<f64> = (0..g.num_edges()).map(|_| rng.gen()).collect();
        let root = rng.gen_range(0..n);
        if kruskal_mst(&g, &u).unwrap().edges() != invasion_tree(&g, &u, root).unwrap().edges() {
            bad.push("kruskal/invasion");
        }
    }
    let rect = Rect::new(0.0, 0.0, 1.0, 1.0);
    for _ in 0..500 {
        let n = rng.gen_range(2..=10);
        let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.gen(), rng.gen())).collect();
        let set = PointSet::new(pts.clone(), 0.3, Region::Rect(rect)).unwrap();
        let s = euclidean_mst(&set, (Boundary::Free, Boundary::Free)).unwrap();
        let mut got: Vec<(usize, usize)> = s
            .tree
            .edges()
            .iter()
            .map(|&e| {
                let e = s.graph.edge(e);
                (e.a.min(e.b), e.a.max(e.b))
            })
            .collect();
        got.sort_unstable();
        if got != complete_graph_emst(&pts) {
            bad.push("emst");
        }
    }
    for _ in 0..500 {
        let n = rng.gen_range(2..=12);
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let ns = rng.gen_range(1..=(n / 2).max(1));
        let nt = rng.gen_range(1..=(n - ns).clamp(1, 3));
        let mut q = CrossingQuery::new(n, order[..ns].to_vec(), order[ns..ns + nt].to_vec()).unwrap();
        for _ in 0..rng.gen_range(0..=(2 * n).min(18)) {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if a == b {
                continue;
            }
            if rng.gen_bool(0.2) {
                q.arcs.push([a, b]);
            } else {
                q.edges.push([a, b]);
            }
        }
        if rng.gen_bool(0.3) {
            q.unbounded.push(q.sinks[0]);
        }
        if max_disjoint_crossings(&q) != exhaustive_disjoint_paths(&q) {
            bad.push("max-flow");
        }
    }
    for _ in 0..1000 {
        let len = rng.gen_range(1..300);
        let k = rng.gen_range(1..30);
        let walk: Vec<u32> = (0..len).map(|_| rng.gen_range(0..k)).collect();
        if loop_erase(&walk) != reference_loop_erase(&walk) {
            bad.push("loop-erase");
        }
    }
    outcome(bad.is_empty(), format!("3000 oracle instances, mismatches: {bad:?}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut notes = Vec::new();
    let mut tally = |name: &str, r: CheckReport| {
        if !r.holds() {
            notes.push(format!("{name}: {} violations", r.violations.len()));
        }
        r.checked
    };
    let mut g = build_lattice_annulus(0.125, &AnnulusSpec::free_wired(Point::ORIGIN, 1.0, 3.0).unwrap()).unwrap();
    let dual = planar_dual(&mut g).unwrap();
    let boxg = build_lattice_box(0.25, &Rect::new(0.0, 0.0, 6.0, 6.0), Boundary::Free).unwrap();
    let mut checked = 0;
    for _ in 0..200 {
        let u = draw_call_numbers(&g, &mut rng);
        let t = kruskal_mst(&g, &u).unwrap();
        checked += tally("vacancy cycle (MST)", verify_vacancy_cycle_property(&g, &u, &t).unwrap());
        checked += tally("dual MST", dual_mst_check(&g, &dual, &u).unwrap());
        let ub = draw_call_numbers(&boxg, &mut rng);
        checked += tally("bracketing", bracketing_check(&boxg, &ub, &Rect::new(1.5, 1.0, 4.5, 5.0)).unwrap());
        checked += tally("free/wired domination", fw_factorization_sample(&boxg, &ub, Point::new(3.0, 3.0), 2.1).unwrap());
    }
    let ring = Region::Annulus {
        center: Point::ORIGIN,
        r: 1.0,
        outer: 3.0,
    };
    for _ in 0..50 {
        let pts = sample_poisson(ring, 0.1, &mut rng).unwrap();
        let s = euclidean_mst(&pts, (Boundary::Free, Boundary::Wired)).unwrap();
        let w: Vec<f64> = s.graph.edges().iter().map(|e| e.length).collect();
        checked += tally("vacancy cycle (EST)", verify_vacancy_cycle_property(&s.graph, &w, &s.tree).unwrap());
    }
    let pc = estimate_droplet_pc(&Rect::new(0.0, 0.0, 4.0, 4.0), 0.1, 400, 203).unwrap().record.p_hat;
    let square = Rect::new(0.0, 0.0, 2.0, 2.0);
    for _ in 0..50 {
        let pts = sample_poisson(Region::Rect(square), 0.1, &mut rng).unwrap();
        let s = euclidean_mst(&pts, (Boundary::Free, Boundary::Free)).unwrap();
        checked += tally("vacant clearance", check_vacant_separation(&s, pc, 0.1, pc * 0.1 / 2.0).unwrap());
    }
    let mut all_four = 0;
    for model in [Model::Ust, Model::Mst] {
        all_four += rectangle_traversal_probability(model, 8.0, 3.0, 1.0, 500, 204).unwrap().all_four;
    }
    if all_four > 0 {
        notes.push(format!("four rotated traversals in {all_four} samples"));
    }
    let mut cover_bad = 0;
    for ci in 1..100 {
        for si in 0..12 {
            let (c, sigma) = (ci as f64 / 100.0, 1.0 + 0.5 * si as f64);
            let cov = cover_circle(c, sigma).unwrap();
            let n = cov.centers.len();
            let covered = (0..2000).all(|i| {
                let a = std::f64::consts::TAU * i as f64 / 2000.0;
                let p = Point::new(a.cos(), a.sin());
                cov.centers.iter().any(|z| z.dist(p) <= c)
            });
            let disjoint = cov.families.iter().all(|f| {
                f.iter()
                    .enumerate()
                    .all(|(i, &a)| f[i + 1..].iter().all(|&b| cov.centers[a].dist(cov.centers[b]) >= 2.0 * sigma * c))
            });
            let bounded = n as f64 <= (std::f64::consts::PI / c.asin()).ceil() + 1.0;
            cover_bad += usize::from(!(covered && disjoint && bounded));
        }
    }
    if cover_bad > 0 {
        notes.push(format!("cover invariants fail on {cover_bad} grid points"));
    }
    outcome(
        notes.is_empty(),
        format!("{checked} items checked, p_c estimate {pc:.4}, violations: {notes:?}"),
    )
}

/// Graphs small enough that all spanning trees can be listed.
fn small_graphs() -> Vec<(&'static str, usize, Vec<(usize, usize)>)> {
    let cycle = |n: usize| (0..n).map(|i| (i, (i + 1) % n)).collect::<Vec<_>>();
    let mut out: Vec<(&'static str, usize, Vec<(usize, usize)>)> = Vec::new();
    for (n, name) in [(3, "C3"), (4, "C4"), (5, "C5"), (6, "C6"), (8, "C8"), (10, "C10"), (12, "C12")] {
        out.push((name, n, cycle(n)));
    }
    out.push(("K4 minus an edge", 4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]));
    out.push(("bowtie", 5, vec![(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 0)]));
    out.push(("triangle and square", 6, vec![(0, 1), (1, 2), (2, 0), (0, 3), (3, 4), (4, 5), (5, 0)]));
    out.push(("triangle with tail", 5, vec![(0, 1), (1, 2), (2, 0), (2, 3), (3, 4)]));
    out.push(("theta 1-2-2", 4, vec![(0, 1), (0, 2), (2, 1), (0, 3), (3, 1)]));
    out.push(("C4 with pendants", 6, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 4), (2, 5)]));
    out
}

fn spanning_trees(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let m = edges.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut label: Vec<usize> = (0..n).collect();
        let mut ok = true;
        for e in (0..m).filter(|e| mask >> e & 1 == 1) {
            let (a, b) = (label[edges[e].0], label[edges[e].1]);
            if a == b {
                ok = false;
                break;
            }
            for l in label.iter_mut() {
                if *l == b {
                    *l = a;
                }
            }
        }
        if ok {
            out.push((0..m).filter(|e| mask >> e & 1 == 1).collect());
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let mut worst: (f64, &str) = (1.0, "");
    let mut notes = Vec::new();
    for (gi, (name, n, edges)) in small_graphs().into_iter().enumerate() {
        let trees = spanning_trees(n, &edges);
        if trees.len() > 12 {
            notes.push(format!("{name} has {} trees", trees.len()));
            continue;
        }
        let pts: Vec<Point> = (0..n).map(|i| Point::new(i as f64, 0.0)).collect();
        let g = RegionGraph::from_parts(pts, false, edges.iter().map(|&(a, b)| Edge::new(a, b, 1.0)).collect()).unwrap();
        let index: HashMap<Vec<usize>, usize> = trees.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut counts = vec![0u64; trees.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(300 + gi as u64);
        for _ in 0..100_000 {
            let t = wilson_ust(&g, 0, &mut rng).unwrap();
            counts[index[t.edges()]] += 1;
        }
        let p = chi_square_pvalue(&counts, &vec![1.0 / trees.len() as f64; trees.len()]);
        if p < worst.0 {
            worst = (p, name);
        }
    }
    outcome(
        worst.0 > 1e-3 && notes.is_empty(),
        format!("smallest chi-square p-value {:.4} ({}) {notes:?}", worst.0, worst.1),
    )
}

fn criterion_4() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [8usize, 16, 32] {
        let rect = Rect::new(0.0, 0.0, n as f64, (n - 1) as f64);
        let g = build_lattice_box(1.0, &rect, Boundary::Free).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(400 + n as u64);
        let samples = 10_000;
        let mut hits = 0u32;
        for _ in 0..samples {
            let open: Vec<usize> = (0..g.num_edges()).filter(|_| rng.gen_bool(0.5)).collect();
            hits += u32::from(rectangle_crossed(&g, &open, &rect, true, 1e-9));
        }
        let p = hits as f64 / samples as f64;
        let sigma = (0.25 / samples as f64).sqrt();
        ok &= (p - 0.5).abs() <= 3.0 * sigma;
        parts.push(format!("n={n}: {p:.4}"));
    }
    outcome(ok, format!("{} (target 0.5, 3 sigma = {:.4})", parts.join(", "), 3.0 * 0.005))
}

fn criterion_5() -> Outcome {
    let rep = rectangle_traversal_probability(Model::Ust, 16.0, 3.0, 1.0, 10_000, 500).unwrap();
    let se = (rep.record.p_hat * (1.0 - rep.record.p_hat) / 10_000.0).sqrt();
    outcome(
        rep.passed && rep.bound_applies,
        format!(
            "p = {:.4}, bound 0.75 + 3 se = {:.4}, images {:?}, all four {}",
            rep.record.p_hat,
            0.75 + 3.0 * se,
            rep.copies,
            rep.all_four
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (model, aspect, res) in [(Model::Ust, 3.0, 16.0), (Model::Mst, 9.0, 8.0)] {
        let spec = AnnulusSpec::free_wired(Point::ORIGIN, 1.0, aspect).unwrap();
        let rep = geometric_decay_check(model, &spec, 3, 1.0 / res, 10_000, 600, 0.05).unwrap();
        ok &= rep.passed;
        let ratios: Vec<String> = rep
            .ratios
            .iter()
            .map(|r| format!("k={}: {:.3} (upper {:.3})", r.k, r.ratio, r.ci_high))
            .collect();
        parts.push(format!(
            "{} aspect {aspect}: {} {}",
            model.name(),
            ratios.join(", "),
            if rep.passed { "ok" } else { "above 1 - 0.05" }
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_7() -> Outcome {
    let table = crossing_table(
        Model::Ust,
        Point::ORIGIN,
        1.0,
        &[2.0, 3.0, 4.5, 6.75],
        &[2],
        (Boundary::Free, Boundary::Wired),
        1.0 / 16.0,
        100_000,
        700,
    )
    .unwrap();
    let recs: Vec<_> = table.into_iter().map(|mut row| row.remove(0)).collect();
    let probs: Vec<String> = recs.iter().map(|r| format!("{:.4}", r.p_hat)).collect();
    match fit_exponent(&recs, 20) {
        Ok(fit) => {
            let gate = fit.exponent - 3.0 * fit.stderr > 0.0;
            let prediction = (fit.exponent - 0.75).abs() <= 0.15;
            outcome(
                gate,
                format!(
                    "gamma(2) = {:.4} +- {:.4} from p = [{}]; hard gate {}; prediction 0.75 +- 0.15 {}",
                    fit.exponent,
                    fit.stderr,
                    probs.join(", "),
                    if gate { "met" } else { "missed" },
                    if prediction { "met" } else { "missed (informational)" }
                ),
            )
        }
        Err(e) => outcome(false, format!("fit failed: {e}")),
    }
}

fn criterion_8() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (model, n) in [(Model::Ust, 10_000), (Model::Mst, 4_000)] {
        let rep = telescopic_compare(model, &[1.0, 3.0, 9.0], 2, 1.0 / 8.0, n, 800).unwrap();
        ok &= rep.passed;
        parts.push(format!(
            "{}: lhs {:.4} vs product {:.4} (+- {:.4})",
            model.name(),
            rep.lhs.p_hat,
            rep.product,
            rep.product_stderr
        ));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (model, n) in [(Model::Ust, 4_000), (Model::Mst, 2_000), (Model::Est, 1_000)] {
        let (recs, rep) = crossing_stability(model, 3.0, 2, &[8.0, 16.0, 32.0], n, 900).unwrap();
        ok &= rep.stable;
        let cis: Vec<String> = recs.iter().map(|r| format!("[{:.3}, {:.3}]", r.ci_low, r.ci_high)).collect();
        parts.push(format!("{}: {}", model.name(), cis.join(" ")));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let seg: Vec<Point> = (0..10_000).map(|i| Point::new(i as f64 / 9999.0, 0.37 * i as f64 / 9999.0)).collect();
    let d_seg = box_counting(&seg, &dyadic_scales(&seg, 1e-4)).unwrap().slope;
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let square: Vec<Point> = (0..1_000_000).map(|_| Point::new(rng.gen(), rng.gen())).collect();
    let d_sq = box_counting(&square, &dyadic_scales(&square, 1e-3)).unwrap().slope;
    let g = build_lattice_box(1.0, &Rect::new(0.0, 0.0, 511.0, 511.0), Boundary::Free).unwrap();
    let far = g.points().iter().position(|p| p.x == 511.0 && p.y == 511.0).unwrap();
    let near = g.points().iter().position(|p| p.x == 0.0 && p.y == 0.0).unwrap();
    let branch = wilson_branches(&g, near, &[far], &mut rng);
    let mut pts: Vec<Point> = branch
        .iter()
        .flat_map(|&e| [g.edge(e).a, g.edge(e).b])
        .map(|v| g.point(v).unwrap())
        .collect();
    pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    pts.dedup();
    let d_branch = box_counting(&pts, &dyadic_scales(&pts, 1.0)).unwrap().slope;
    let ok = (d_seg - 1.0).abs() <= 0.05 && (d_sq - 2.0).abs() <= 0.05 && d_branch > 1.05 && d_branch < 1.95;
    outcome(
        ok,
        format!(
            "segment {d_seg:.4}, square {d_sq:.4}, UST corner-to-corner branch {d_branch:.4} ({} vertices)",
            pts.len()
        ),
    )
}

fn criterion_11() -> Outcome {
    let recs: Vec<_> = [8.0, 16.0]
        .iter()
        .map(|&res| estimate_choking_probability(1.0 / res, 1.0, 10_000, 1100).unwrap())
        .collect();
    let positive = recs.iter().all(|r| r.p_hat - 3.0 * (r.p_hat * (1.0 - r.p_hat) / r.n_samples as f64).sqrt() > 0.0);
    let overlap = recs[0].ci_high >= recs[1].ci_low && recs[1].ci_high >= recs[0].ci_low;
    outcome(
        positive && overlap,
        format!(
            "p(r/delta=8) = {} / {}, p(r/delta=16) = {} / {}; positive beyond 3 sigma: {positive}, overlap: {overlap}",
            recs[0].successes, recs[0].n_samples, recs[1].successes, recs[1].n_samples
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("exact small-instance oracles", criterion_1),
        ("deterministic invariant suite", criterion_2),
        ("UST uniformity", criterion_3),
        ("critical percolation self-duality", criterion_4),
        ("rectangle traversal bound", criterion_5),
        ("geometric decay", criterion_6),
        ("exponent gamma(2)", criterion_7),
        ("telescopic inequality", criterion_8),
        ("resolution stability", criterion_9),
        ("box-counting dimension", criterion_10),
        ("choking probability", criterion_11),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        println!(
            "criterion {id:>2} {} {name} [{:.1}s]: {}",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
