//! Crossing probabilities, exponent fits and the statistical property checks
//! built on per-sample traversal counts.

use crate::crossings::{branch_count_to_root, percolation_crossing_count, rectangle_crossed, tree_traversal_count};
use crate::error::{Error, Result};
use crate::est::{euclidean_mst, sample_poisson, Region};
use crate::geom::{Point, Rect};
use crate::grid::{build_lattice_annulus, AnnulusSpec, Boundary, RegionGraph, Side};
use crate::mst::{draw_call_numbers, kruskal_mst};
use crate::record::{EstimateRecord, ExponentFit, GeometryKind, Model};
use crate::rng::{seed_stream, SampleRng};
use crate::stats::{least_squares, proportion_stderr, weighted_line_fit, wilson_interval, z_bonferroni};
use crate::ust::{wilson_branches, wilson_ust};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Inflation for combined standard errors when checking an inequality.
pub const SIGMA_TOLERANCE: f64 = 3.0;

fn check_n(n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    Ok(())
}

/// Independent per-experiment seed for part `j` of a composite experiment.
fn derived_seed(seed: u64, j: u64) -> u64 {
    seed ^ (j + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Draws one sample of `model` on a prepared lattice annulus and counts its
/// disjoint traversals.
fn lattice_count(model: Model, g: &RegionGraph, rng: &mut SampleRng) -> Result<u32> {
    let count = match model {
        Model::Ust => match g.wired_vertex() {
            Some(w) if g.is_wired(Side::Inner) != g.is_wired(Side::Outer) => {
                let free_side = if g.is_wired(Side::Inner) { Side::Outer } else { Side::Inner };
                let starts = g.free_boundary(free_side);
                let edges = wilson_branches(g, w, starts, rng);
                branch_count_to_root(g, &edges, w, starts)
            }
            _ => {
                let t = wilson_ust(g, 0, rng)?;
                tree_traversal_count(g, t.edges())?
            }
        },
        Model::Mst => {
            let u = draw_call_numbers(g, rng);
            tree_traversal_count(g, kruskal_mst(g, &u)?.edges())?
        }
        Model::Bernoulli => {
            let open: Vec<usize> = (0..g.num_edges()).filter(|_| rng.gen_bool(0.5)).collect();
            percolation_crossing_count(g, &open)?
        }
        _ => unreachable!(),
    };
    Ok(count as u32)
}

fn est_count(spec: &AnnulusSpec, delta: f64, rng: &mut SampleRng) -> Result<u32> {
    let region = Region::Annulus {
        center: spec.center,
        r: spec.r,
        outer: spec.outer,
    };
    let pts = sample_poisson(region, delta, rng)?;
    if pts.is_empty() {
        return Ok(0);
    }
    let s = euclidean_mst(&pts, (spec.bc_inner, spec.bc_outer))?;
    Ok(tree_traversal_count(&s.graph, s.tree.edges())? as u32)
}

/// Disjoint-traversal count of the annulus for each of `n` independent
/// samples, in sample-index order.
pub fn traversal_counts(model: Model, spec: &AnnulusSpec, delta: f64, n: u64, seed: u64) -> Result<Vec<u32>> {
    check_n(n)?;
    match model {
        Model::Ust | Model::Mst | Model::Bernoulli => {
            let g = build_lattice_annulus(delta, spec)?;
            (0..n)
                .into_par_iter()
                .map(|i| lattice_count(model, &g, &mut seed_stream(seed, i)))
                .collect()
        }
        Model::Est => (0..n)
            .into_par_iter()
            .map(|i| est_count(spec, delta, &mut seed_stream(seed, i)))
            .collect(),
        Model::Droplet | Model::Vacant => Err(Error::InvalidArgument(format!(
            "{} has no annulus traversal count",
            model.name()
        ))),
    }
}

/// Record for the event "at least `k` disjoint traversals" from shared counts.
pub fn record_from_counts(model: Model, spec: &AnnulusSpec, delta: f64, counts: &[u32], k: u32, seed: u64) -> EstimateRecord {
    let successes = counts.iter().filter(|&&c| c >= k).count() as u64;
    EstimateRecord::proportion(
        model,
        "crossing",
        GeometryKind::Annulus,
        (spec.r, spec.outer),
        k,
        delta,
        (spec.bc_inner, spec.bc_outer),
        successes,
        counts.len() as u64,
        seed,
    )
}

pub fn estimate_crossing_probability(
    model: Model,
    spec: &AnnulusSpec,
    k: u32,
    delta: f64,
    n: u64,
    seed: u64,
) -> Result<EstimateRecord> {
    let counts = traversal_counts(model, spec, delta, n, seed)?;
    Ok(record_from_counts(model, spec, delta, &counts, k, seed))
}

/// Crossing records on `D(r, a r)` for every aspect `a` and every `k`, all
/// `k` measured on the same samples. Indexed `[aspect][k]`.
#[allow(clippy::too_many_arguments)]
pub fn crossing_table(
    model: Model,
    center: Point,
    r: f64,
    aspects: &[f64],
    ks: &[u32],
    bc: (Boundary, Boundary),
    delta: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<Vec<EstimateRecord>>> {
    aspects
        .iter()
        .enumerate()
        .map(|(j, &a)| {
            let spec = AnnulusSpec::new(center, r, a * r, bc.0, bc.1)?;
            let s = derived_seed(seed, j as u64);
            let counts = traversal_counts(model, &spec, delta, n, s)?;
            Ok(ks.iter().map(|&k| record_from_counts(model, &spec, delta, &counts, k, s)).collect())
        })
        .collect()
}

/// Fit of `ln p = ln K + s ln(r/R)` over the records, weighted by the
/// delta-method variance of `ln p`. Cells with fewer than `min_successes`
/// successes (and always those with none) are left out.
pub fn fit_exponent(records: &[EstimateRecord], min_successes: u64) -> Result<ExponentFit> {
    let first = records
        .first()
        .ok_or_else(|| Error::FitFailed("no records".into()))?;
    if records
        .iter()
        .any(|r| r.model != first.model || r.k != first.k || (r.bc_inner, r.bc_outer) != (first.bc_inner, first.bc_outer))
    {
        return Err(Error::FitFailed("records mix models, k or boundary conditions".into()));
    }
    let usable: Vec<&EstimateRecord> = records
        .iter()
        .filter(|r| r.successes > 0 && r.successes >= min_successes)
        .collect();
    if usable.len() < 3 {
        return Err(Error::FitFailed(format!(
            "only {} usable aspect ratios (need 3)",
            usable.len()
        )));
    }
    let xs: Vec<f64> = usable.iter().map(|r| (r.r / r.outer).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|r| r.p_hat.ln()).collect();
    let vars: Vec<f64> = usable
        .iter()
        .map(|r| {
            let n = r.n_samples as f64;
            (1.0 - r.p_hat + 1.0 / n) / (n * r.p_hat)
        })
        .collect();
    let (a, b, se) = weighted_line_fit(&xs, &ys, &vars);
    Ok(ExponentFit {
        model: first.model,
        k: first.k,
        exponent: b,
        stderr: se,
        log_intercept: a,
        aspect_ratios: usable.iter().map(|r| r.aspect()).collect(),
        residuals: xs.iter().zip(&ys).map(|(x, y)| y - (a + b * x)).collect(),
    })
}

/// Conditional proportion `P(count >= k+1 | count >= k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub k: u32,
    pub successes: u64,
    pub trials: u64,
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    /// `p(k)` for `k = 1..=k_max + 1`.
    pub records: Vec<EstimateRecord>,
    pub ratios: Vec<RatioEstimate>,
    /// `-d ln p / dk` over the positive estimates.
    pub decay_rate: Option<f64>,
    pub monotone: bool,
    pub margin: f64,
    pub passed: bool,
}

/// Checks `p(k+1)/p(k) < 1 - margin` for `k = 1..=k_max`, each ratio with a
/// Bonferroni-corrected 95% Wilson interval.
pub fn geometric_decay_from_counts(
    model: Model,
    spec: &AnnulusSpec,
    delta: f64,
    counts: &[u32],
    k_max: u32,
    margin: f64,
    seed: u64,
) -> DecayReport {
    let records: Vec<EstimateRecord> = (1..=k_max + 1)
        .map(|k| record_from_counts(model, spec, delta, counts, k, seed))
        .collect();
    let z = z_bonferroni(0.95, k_max as usize);
    let ratios: Vec<RatioEstimate> = (1..=k_max)
        .map(|k| {
            let trials = records[k as usize - 1].successes;
            let successes = records[k as usize].successes;
            let (lo, hi) = wilson_interval(successes, trials, z);
            RatioEstimate {
                k,
                successes,
                trials,
                ratio: if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 },
                ci_low: lo,
                ci_high: hi,
            }
        })
        .collect();
    let positive: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.successes > 0)
        .map(|r| (r.k as f64, r.p_hat.ln()))
        .collect();
    let decay_rate = (positive.len() >= 2)
        .then(|| {
            let design: Vec<Vec<f64>> = positive.iter().map(|&(k, _)| vec![1.0, k]).collect();
            let ys: Vec<f64> = positive.iter().map(|&(_, y)| y).collect();
            least_squares(&design, &ys).map(|(c, _)| -c[1])
        })
        .flatten();
    let monotone = records.windows(2).all(|w| w[1].successes <= w[0].successes);
    let passed = monotone && ratios.iter().all(|r| r.trials > 0 && r.ci_high < 1.0 - margin);
    DecayReport {
        records,
        ratios,
        decay_rate,
        monotone,
        margin,
        passed,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn geometric_decay_check(
    model: Model,
    spec: &AnnulusSpec,
    k_max: u32,
    delta: f64,
    n: u64,
    seed: u64,
    margin: f64,
) -> Result<DecayReport> {
    let counts = traversal_counts(model, spec, delta, n, seed)?;
    Ok(geometric_decay_from_counts(model, spec, delta, &counts, k_max, margin, seed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelescopicReport {
    pub lhs: EstimateRecord,
    pub factors: Vec<EstimateRecord>,
    /// Per-shell frequency of an edge crossing the shell; zero on the lattice.
    pub long_edge: Vec<f64>,
    pub product: f64,
    pub product_stderr: f64,
    pub passed: bool,
}

/// Compares `p(D(r_1, r_m), k)` with the product of the shell probabilities
/// `p(D(r_j, r_{j+1}), k)`, all Free/Wired and independently sampled.
pub fn telescopic_compare(model: Model, radii: &[f64], k: u32, delta: f64, n: u64, seed: u64) -> Result<TelescopicReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(format!("radii must increase, got {radii:?}")));
    }
    if !matches!(model, Model::Ust | Model::Mst | Model::Bernoulli) {
        return Err(Error::InvalidArgument(format!(
            "telescopic comparison is implemented for lattice models, not {}",
            model.name()
        )));
    }
    let run = |r: f64, outer: f64, s: u64| -> Result<EstimateRecord> {
        estimate_crossing_probability(model, &AnnulusSpec::free_wired(Point::ORIGIN, r, outer)?, k, delta, n, s)
    };
    let lhs = run(radii[0], radii[radii.len() - 1], seed)?;
    let factors: Vec<EstimateRecord> = if radii.len() == 2 {
        vec![lhs.clone()]
    } else {
        radii
            .windows(2)
            .enumerate()
            .map(|(j, w)| run(w[0], w[1], derived_seed(seed, j as u64)))
            .collect::<Result<_>>()?
    };
    let long_edge = vec![0.0; factors.len()];
    let terms: Vec<f64> = factors.iter().zip(&long_edge).map(|(f, l)| f.p_hat + l).collect();
    let product: f64 = terms.iter().product();
    let rel: f64 = factors
        .iter()
        .zip(&terms)
        .map(|(f, t)| {
            let se = proportion_stderr(f.successes, f.n_samples);
            if *t > 0.0 {
                (se / t).powi(2)
            } else {
                0.0
            }
        })
        .sum();
    let product_stderr = product * rel.sqrt();
    let lhs_se = proportion_stderr(lhs.successes, lhs.n_samples);
    let passed = radii.len() == 2
        || lhs.p_hat - product <= SIGMA_TOLERANCE * (lhs_se.powi(2) + product_stderr.powi(2)).sqrt();
    Ok(TelescopicReport {
        lhs,
        factors,
        long_edge,
        product,
        product_stderr,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MgfEstimate {
    pub t: f64,
    pub mean: f64,
    /// Jackknife standard error.
    pub stderr: f64,
    pub n_samples: u64,
}

/// Sample mean of `exp(t M)` over the counts, with a jackknife error.
pub fn mgf_from_counts(counts: &[u32], t: f64) -> MgfEstimate {
    let n = counts.len();
    let vals: Vec<f64> = counts.iter().map(|&m| (t * m as f64).exp()).collect();
    let total: f64 = vals.iter().sum();
    let mean = total / n as f64;
    let stderr = if n < 2 {
        f64::NAN
    } else {
        let nf = n as f64;
        let loo = vals.iter().map(|v| (total - v) / (nf - 1.0));
        let ss: f64 = loo.map(|m| (m - mean).powi(2)).sum();
        ((nf - 1.0) / nf * ss).sqrt()
    };
    MgfEstimate {
        t,
        mean,
        stderr,
        n_samples: n as u64,
    }
}

pub fn estimate_crossing_mgf(model: Model, spec: &AnnulusSpec, t: f64, delta: f64, n: u64, seed: u64) -> Result<MgfEstimate> {
    Ok(mgf_from_counts(&traversal_counts(model, spec, delta, n, seed)?, t))
}

/// Linear and quadratic models for the exponents as functions of `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub ks: Vec<u32>,
    pub exponents: Vec<f64>,
    /// `a + b k`
    pub linear: Vec<f64>,
    /// `a + b k + c k^2`
    pub quadratic: Vec<f64>,
    pub aic_linear: f64,
    pub aic_quadratic: f64,
    pub prefers_quadratic: bool,
    /// Least-squares `beta` in `gamma(k) = beta (k - 1)^2`.
    pub beta: f64,
    /// Nondecreasing up to the combined tolerance of neighbouring fits.
    pub nondecreasing: bool,
}

pub fn quadratic_growth_probe(fits: &[ExponentFit]) -> Result<GrowthReport> {
    if fits.len() < 3 {
        return Err(Error::FitFailed("need exponents for at least 3 values of k".into()));
    }
    let mut fits = fits.to_vec();
    fits.sort_by_key(|f| f.k);
    let ks: Vec<f64> = fits.iter().map(|f| f.k as f64).collect();
    let ys: Vec<f64> = fits.iter().map(|f| f.exponent).collect();
    let n = ks.len() as f64;
    let aic = |rss: f64, p: f64| n * (rss.max(1e-300) / n).ln() + 2.0 * p;
    let lin_design: Vec<Vec<f64>> = ks.iter().map(|&k| vec![1.0, k]).collect();
    let quad_design: Vec<Vec<f64>> = ks.iter().map(|&k| vec![1.0, k, k * k]).collect();
    let (linear, rss_lin) = least_squares(&lin_design, &ys).ok_or_else(|| Error::FitFailed("linear fit".into()))?;
    let (quadratic, rss_quad) = least_squares(&quad_design, &ys).ok_or_else(|| Error::FitFailed("quadratic fit".into()))?;
    let (aic_linear, aic_quadratic) = (aic(rss_lin, 2.0), aic(rss_quad, 3.0));
    let sq: Vec<f64> = ks.iter().map(|k| (k - 1.0).powi(2)).collect();
    let den: f64 = sq.iter().map(|s| s * s).sum();
    let beta = if den > 0.0 { sq.iter().zip(&ys).map(|(s, y)| s * y).sum::<f64>() / den } else { f64::NAN };
    let nondecreasing = fits.windows(2).all(|w| {
        w[1].exponent >= w[0].exponent - SIGMA_TOLERANCE * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt()
    });
    Ok(GrowthReport {
        ks: fits.iter().map(|f| f.k).collect(),
        exponents: ys,
        linear,
        quadratic,
        aic_linear,
        aic_quadratic,
        prefers_quadratic: aic_quadratic < aic_linear,
        beta,
        nondecreasing,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RectangleReport {
    /// Lengthwise traversal of the unrotated rectangle.
    pub record: EstimateRecord,
    /// Traversal counts of the four quarter-turn images.
    pub copies: [u64; 4],
    /// Samples in which all four images were traversed.
    pub all_four: u64,
    /// Whether `sigma > 2` and `delta` is fine enough for the loop argument.
    pub bound_applies: bool,
    pub passed: bool,
}

/// The rectangle `[-L/2, L/2] x [delta, delta + w]` snapped inward to the
/// lattice, where `w = ell` and `L = sigma ell`; the origin is the lattice
/// point just below the middle of its long side.
fn traversal_rectangle(ell: f64, sigma: f64, delta: f64) -> Rect {
    let half = (sigma * ell / (2.0 * delta)).floor() * delta;
    let width = (ell / delta).round().max(1.0) * delta;
    Rect::new(-half, delta, half, delta + width)
}

fn rotate_rect(r: &Rect, q: i32) -> Rect {
    let a = Point::new(r.x0, r.y0).rotate_quarter(q);
    let b = Point::new(r.x1, r.y1).rotate_quarter(q);
    Rect::new(a.x.min(b.x), a.y.min(b.y), a.x.max(b.x), a.y.max(b.y))
}

/// Samples the tree in the free disc of radius `sigma ell` about the origin
/// and tests lengthwise traversal of the rectangle and its rotations.
pub fn rectangle_traversal_probability(model: Model, ell: f64, sigma: f64, delta: f64, n: u64, seed: u64) -> Result<RectangleReport> {
    check_n(n)?;
    if !(ell > 0.0 && sigma > 0.0 && delta > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "need positive ell, sigma and delta, got {ell}, {sigma}, {delta}"
        )));
    }
    if !matches!(model, Model::Ust | Model::Mst) {
        return Err(Error::InvalidArgument(format!(
            "rectangle traversal is implemented for lattice trees, not {}",
            model.name()
        )));
    }
    let disc = AnnulusSpec::new(Point::ORIGIN, 0.0, sigma * ell, Boundary::Free, Boundary::Free)?;
    let g = build_lattice_annulus(delta, &disc)?;
    let base = traversal_rectangle(ell, sigma, delta);
    let rects: Vec<Rect> = (0..4).map(|q| rotate_rect(&base, q)).collect();
    let reach = 1e-9 * delta;
    let hits: Vec<[bool; 4]> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<[bool; 4]> {
            let mut rng = seed_stream(seed, i);
            let t = match model {
                Model::Ust => wilson_ust(&g, 0, &mut rng)?,
                _ => kruskal_mst(&g, &draw_call_numbers(&g, &mut rng))?,
            };
            let mut out = [false; 4];
            for (q, r) in rects.iter().enumerate() {
                out[q] = rectangle_crossed(&g, t.edges(), r, q % 2 == 0, reach);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut copies = [0u64; 4];
    for h in &hits {
        for q in 0..4 {
            copies[q] += u64::from(h[q]);
        }
    }
    let all_four = hits.iter().filter(|h| h.iter().all(|&b| b)).count() as u64;
    let record = EstimateRecord::proportion(
        model,
        "rectangle",
        GeometryKind::Rectangle,
        (base.height(), base.width()),
        1,
        delta,
        (Boundary::Free, Boundary::Free),
        copies[0],
        n,
        seed,
    );
    let bound_applies = sigma > 2.0 && delta <= (sigma - 2.0) / (4.0 * 2f64.sqrt()) * ell;
    let se = proportion_stderr(copies[0], n);
    let passed = all_four == 0 && (!bound_applies || record.p_hat <= 0.75 + SIGMA_TOLERANCE * se);
    Ok(RectangleReport {
        record,
        copies,
        all_four,
        bound_applies,
        passed,
    })
}

/// An observable measured at one resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResolutionPoint {
    pub delta: f64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl From<&EstimateRecord> for ResolutionPoint {
    fn from(r: &EstimateRecord) -> Self {
        ResolutionPoint {
            delta: r.delta,
            value: r.p_hat,
            ci_low: r.ci_low,
            ci_high: r.ci_high,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub points: Vec<ResolutionPoint>,
    /// Index pairs whose intervals are disjoint.
    pub disjoint_pairs: Vec<(usize, usize)>,
    pub stable: bool,
}

/// Stable when every pair of intervals overlaps.
pub fn delta_stability_check(points: &[ResolutionPoint]) -> StabilityReport {
    let mut disjoint_pairs = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (a, b) = (&points[i], &points[j]);
            if a.ci_high < b.ci_low || b.ci_high < a.ci_low {
                disjoint_pairs.push((i, j));
            }
        }
    }
    StabilityReport {
        points: points.to_vec(),
        stable: disjoint_pairs.is_empty(),
        disjoint_pairs,
    }
}

/// Crossing probability of `D(r, aspect r)` at each `r / delta`, Free/Wired.
#[allow(clippy::too_many_arguments)]
pub fn crossing_stability(
    model: Model,
    aspect: f64,
    k: u32,
    resolutions: &[f64],
    n: u64,
    seed: u64,
) -> Result<(Vec<EstimateRecord>, StabilityReport)> {
    let records: Vec<EstimateRecord> = resolutions
        .iter()
        .enumerate()
        .map(|(j, &res)| {
            let spec = AnnulusSpec::free_wired(Point::ORIGIN, 1.0, aspect)?;
            estimate_crossing_probability(model, &spec, k, 1.0 / res, n, derived_seed(seed, j as u64))
        })
        .collect::<Result<_>>()?;
    let points: Vec<ResolutionPoint> = records.iter().map(ResolutionPoint::from).collect();
    let report = delta_stability_check(&points);
    Ok((records, report))
}
