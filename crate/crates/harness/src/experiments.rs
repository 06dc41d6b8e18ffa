//! One runner per experiment kind. Each returns its CSV tables, a JSON
//! report and, for kinds that test an inequality, the verdict.

use crate::config::{CurveKind, ExperimentConfig, Kind};
use crate::output::*;
use crate::{Error, Result};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use spantree_core::analysis::{
    crossing_stability, crossing_table, estimate_crossing_mgf, estimate_crossing_probability, fit_exponent,
    geometric_decay_check, quadratic_growth_probe, rectangle_traversal_probability, telescopic_compare, SIGMA_TOLERANCE,
};
use spantree_core::est::estimate_droplet_pc;
use spantree_core::fractal::{box_counting, branching_census, dyadic_scales, DimensionFit};
use spantree_core::geom::Rect;
use spantree_core::grid::build_lattice_box;
use spantree_core::rng::seed_stream;
use spantree_core::stats::{mean, variance};
use spantree_core::ust::{estimate_choking_probability, wilson_branches, wilson_ust};
use spantree_core::{Boundary, EstimateRecord, ExponentFit, Point};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

pub struct Outcome {
    pub tables: Vec<Table>,
    pub report: Value,
    pub check: Option<Check>,
}

fn check(name: &str, passed: bool, detail: String) -> Option<Check> {
    Some(Check {
        name: name.to_string(),
        passed,
        detail,
    })
}

fn records_table(recs: &[EstimateRecord]) -> Result<Table> {
    table("records", &recs.iter().map(EstimateRow::from).collect::<Vec<_>>())
}

fn fits_table(fits: &[ExponentFit]) -> Result<Table> {
    table("fit", &fits.iter().map(FitRow::from).collect::<Vec<_>>())
}

pub fn run(kind: Kind, cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    match kind {
        Kind::CrossingProb => crossing_prob(cfg),
        Kind::FitGamma => fit_gamma(cfg),
        Kind::GeometricDecay => geometric_decay(cfg),
        Kind::Telescopic => telescopic(cfg),
        Kind::Mgf => mgf(cfg),
        Kind::QuadraticGrowth => quadratic_growth(cfg),
        Kind::Rectangle => rectangle(cfg),
        Kind::DeltaStability => delta_stability(cfg),
        Kind::Choking => choking(cfg),
        Kind::DropletPc => droplet_pc(cfg),
        Kind::BoxCounting => box_dimension(cfg),
        Kind::BranchingCensus => census(cfg),
    }
}

fn crossing_prob(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::CrossingProb;
    let rec = estimate_crossing_probability(
        cfg.model(kind)?,
        &cfg.annulus(kind)?,
        cfg.k(kind)?,
        cfg.delta(kind)?,
        cfg.n_samples(kind)?,
        cfg.seed(kind)?,
    )?;
    Ok(Outcome {
        tables: vec![records_table(std::slice::from_ref(&rec))?],
        report: json!({ "record": rec }),
        check: None,
    })
}

fn fit_gamma(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::FitGamma;
    let k = cfg.k(kind)?;
    let table_ = crossing_table(
        cfg.model(kind)?,
        Point::ORIGIN,
        cfg.r(),
        &cfg.list(&cfg.aspects, "aspects", kind)?,
        &[k],
        cfg.bc(),
        cfg.delta(kind)?,
        cfg.n_samples(kind)?,
        cfg.seed(kind)?,
    )?;
    let recs: Vec<EstimateRecord> = table_.into_iter().flatten().collect();
    let fit = fit_exponent(&recs, cfg.min_successes.unwrap_or(20))?;
    let lower = fit.exponent - SIGMA_TOLERANCE * fit.stderr;
    let verdict = check(
        "exponent positive",
        lower > 0.0,
        format!("exponent {:.4} +- {:.4}, lower bound {lower:.4}", fit.exponent, fit.stderr),
    );
    Ok(Outcome {
        tables: vec![records_table(&recs)?, fits_table(std::slice::from_ref(&fit))?],
        report: json!({ "fit": fit }),
        check: verdict,
    })
}

fn geometric_decay(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::GeometricDecay;
    let model = cfg.model(kind)?;
    let report = geometric_decay_check(
        model,
        &cfg.annulus(kind)?,
        cfg.k_max.unwrap_or(3),
        cfg.delta(kind)?,
        cfg.n_samples(kind)?,
        cfg.seed(kind)?,
        cfg.margin.unwrap_or(0.05),
    )?;
    let ratios: Vec<RatioRow> = report
        .ratios
        .iter()
        .map(|q| RatioRow {
            schema_version: SCHEMA_VERSION,
            model: model.name(),
            k: q.k,
            successes: q.successes,
            trials: q.trials,
            ratio: q.ratio,
            ci_low: q.ci_low,
            ci_high: q.ci_high,
            margin: report.margin,
        })
        .collect();
    let detail = report
        .ratios
        .iter()
        .map(|q| format!("k={}: {:.4} (upper {:.4})", q.k, q.ratio, q.ci_high))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        tables: vec![records_table(&report.records)?, table("ratios", &ratios)?],
        check: check("ratios below 1 - margin", report.passed, detail),
        report: json!({ "decay": report }),
    })
}

fn telescopic(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::Telescopic;
    let report = telescopic_compare(
        cfg.model(kind)?,
        &cfg.list(&cfg.radii, "radii", kind)?,
        cfg.k(kind)?,
        cfg.delta(kind)?,
        cfg.n_samples(kind)?,
        cfg.seed(kind)?,
    )?;
    let mut recs = vec![report.lhs.clone()];
    recs.extend(report.factors.iter().cloned());
    Ok(Outcome {
        tables: vec![records_table(&recs)?],
        check: check(
            "big annulus below product of shells",
            report.passed,
            format!("lhs {:.4} vs product {:.4} +- {:.4}", report.lhs.p_hat, report.product, report.product_stderr),
        ),
        report: json!({ "telescopic": report }),
    })
}

fn mgf(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::Mgf;
    let model = cfg.model(kind)?;
    let spec = cfg.annulus(kind)?;
    let (delta, seed) = (cfg.delta(kind)?, cfg.seed(kind)?);
    let t = cfg.get(cfg.t, "t", kind)?;
    let est = estimate_crossing_mgf(model, &spec, t, delta, cfg.n_samples(kind)?, seed)?;
    let row = MgfRow {
        schema_version: SCHEMA_VERSION,
        model: model.name(),
        r: spec.r,
        outer: spec.outer,
        delta,
        t,
        mean: est.mean,
        stderr: est.stderr,
        n_samples: est.n_samples,
        seed,
    };
    Ok(Outcome {
        tables: vec![table("mgf", &[row])?],
        report: json!({ "mgf": est }),
        check: None,
    })
}

fn quadratic_growth(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::QuadraticGrowth;
    let ks = cfg.list(&cfg.ks, "ks", kind)?;
    let grid = crossing_table(
        cfg.model(kind)?,
        Point::ORIGIN,
        cfg.r(),
        &cfg.list(&cfg.aspects, "aspects", kind)?,
        &ks,
        cfg.bc(),
        cfg.delta(kind)?,
        cfg.n_samples(kind)?,
        cfg.seed(kind)?,
    )?;
    let min = cfg.min_successes.unwrap_or(20);
    let fits = (0..ks.len())
        .map(|j| fit_exponent(&grid.iter().map(|row| row[j].clone()).collect::<Vec<_>>(), min))
        .collect::<spantree_core::Result<Vec<_>>>()?;
    let growth = quadratic_growth_probe(&fits)?;
    let recs: Vec<EstimateRecord> = grid.into_iter().flatten().collect();
    Ok(Outcome {
        tables: vec![records_table(&recs)?, fits_table(&fits)?],
        check: check(
            "exponents nondecreasing in k",
            growth.nondecreasing,
            format!(
                "exponents {:?}, beta {:.4}, quadratic preferred: {}",
                growth.exponents, growth.beta, growth.prefers_quadratic
            ),
        ),
        report: json!({ "fits": fits, "growth": growth }),
    })
}

fn rectangle(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::Rectangle;
    let report = rectangle_traversal_probability(
        cfg.model(kind)?,
        cfg.get(cfg.ell, "ell", kind)?,
        cfg.get(cfg.sigma, "sigma", kind)?,
        cfg.get(cfg.delta, "delta", kind)?,
        cfg.n_samples(kind)?,
        cfg.seed(kind)?,
    )?;
    Ok(Outcome {
        tables: vec![records_table(std::slice::from_ref(&report.record))?],
        check: check(
            "rectangle traversal bound",
            report.passed,
            format!(
                "p {:.4}, images {:?}, all four {}, bound applies: {}",
                report.record.p_hat, report.copies, report.all_four, report.bound_applies
            ),
        ),
        report: json!({ "rectangle": report }),
    })
}

fn delta_stability(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::DeltaStability;
    let (recs, report) = crossing_stability(
        cfg.model(kind)?,
        cfg.get(cfg.aspect, "aspect", kind)?,
        cfg.k(kind)?,
        &cfg.list(&cfg.resolutions, "resolutions", kind)?,
        cfg.n_samples(kind)?,
        cfg.seed(kind)?,
    )?;
    Ok(Outcome {
        tables: vec![records_table(&recs)?],
        check: check(
            "intervals overlap across resolutions",
            report.stable,
            format!("disjoint pairs {:?}", report.disjoint_pairs),
        ),
        report: json!({ "stability": report }),
    })
}

fn choking(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::Choking;
    let (r, n, seed) = (cfg.r(), cfg.n_samples(kind)?, cfg.seed(kind)?);
    let recs = cfg
        .list(&cfg.resolutions, "resolutions", kind)?
        .iter()
        .map(|&res| estimate_choking_probability(r / res, r, n, seed))
        .collect::<spantree_core::Result<Vec<_>>>()?;
    let positive = recs.iter().all(|e| {
        let se = (e.p_hat * (1.0 - e.p_hat) / e.n_samples as f64).sqrt();
        e.p_hat - SIGMA_TOLERANCE * se > 0.0
    });
    let overlap = recs
        .iter()
        .all(|a| recs.iter().all(|b| a.ci_high >= b.ci_low && b.ci_high >= a.ci_low));
    let detail = recs
        .iter()
        .map(|e| format!("delta {}: {}/{}", e.delta, e.successes, e.n_samples))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome {
        tables: vec![records_table(&recs)?],
        check: check("choking probability positive and stable", positive && overlap, detail),
        report: json!({ "records": recs, "positive": positive, "overlap": overlap }),
    })
}

fn droplet_pc(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::DropletPc;
    let rect = Rect::new(
        0.0,
        0.0,
        cfg.get(cfg.width, "width", kind)?,
        cfg.get(cfg.height, "height", kind)?,
    );
    let pc = estimate_droplet_pc(&rect, cfg.get(cfg.delta, "delta", kind)?, cfg.n_samples(kind)?, cfg.seed(kind)?)?;
    Ok(Outcome {
        tables: vec![records_table(std::slice::from_ref(&pc.record))?],
        report: json!({ "record": pc.record, "trace": pc.trace }),
        check: None,
    })
}

fn box_dimension(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::BoxCounting;
    let seed = cfg.seed(kind)?;
    let curve = cfg.curve.ok_or_else(|| Error::Config("`curve` is required for box_counting".into()))?;
    let (name, points, resolution) = match curve {
        CurveKind::Segment => {
            let n = cfg.n_samples(kind)?.max(2);
            let pts: Vec<Point> = (0..n)
                .map(|i| {
                    let s = i as f64 / (n - 1) as f64;
                    Point::new(s, 0.37 * s)
                })
                .collect();
            ("segment", pts, 1.0 / n as f64)
        }
        CurveKind::Square => {
            let n = cfg.n_samples(kind)?;
            let mut rng = seed_stream(seed, 0);
            let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.gen(), rng.gen())).collect();
            ("square", pts, 1.0 / (n as f64).sqrt())
        }
        CurveKind::UstBranch => {
            let side = f64::from(cfg.size.ok_or_else(|| Error::Config("`size` is required for a UST branch".into()))?);
            let g = build_lattice_box(1.0, &Rect::new(0.0, 0.0, side, side), Boundary::Free)?;
            let at = |x: f64, y: f64| g.points().iter().position(|p| p.x == x && p.y == y);
            let (near, far) = at(0.0, 0.0)
                .zip(at(side, side))
                .ok_or_else(|| Error::Config("box has no corner vertices".into()))?;
            let branch = wilson_branches(&g, near, &[far], &mut seed_stream(seed, 0));
            let mut pts: Vec<Point> = branch
                .iter()
                .flat_map(|&e| [g.edge(e).a, g.edge(e).b])
                .filter_map(|v| g.point(v))
                .collect();
            pts.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).expect("finite coordinates"));
            pts.dedup();
            ("ust_branch", pts, 1.0)
        }
    };
    let fit: DimensionFit = box_counting(&points, &dyadic_scales(&points, resolution))?;
    let scales: Vec<ScaleRow> = fit
        .scales
        .iter()
        .zip(&fit.counts)
        .map(|(&scale, &count)| ScaleRow {
            schema_version: SCHEMA_VERSION,
            curve: name,
            scale,
            count,
        })
        .collect();
    let dim = DimensionRow {
        schema_version: SCHEMA_VERSION,
        curve: name,
        n_points: points.len(),
        slope: fit.slope,
        stderr: fit.stderr,
        fit_low: fit.fit_range.0,
        fit_high: fit.fit_range.1,
        seed,
    };
    let (passed, window) = match curve {
        CurveKind::Segment => ((fit.slope - 1.0).abs() <= 0.05, "1 +- 0.05"),
        CurveKind::Square => ((fit.slope - 2.0).abs() <= 0.05, "2 +- 0.05"),
        CurveKind::UstBranch => (fit.slope > 1.05 && fit.slope < 1.95, "(1.05, 1.95)"),
    };
    Ok(Outcome {
        tables: vec![table("scales", &scales)?, table("dimension", &[dim])?],
        check: check("dimension in window", passed, format!("slope {:.4}, window {window}", fit.slope)),
        report: json!({ "fit": fit }),
    })
}

fn census(cfg: &ExperimentConfig) -> Result<Outcome> {
    let kind = Kind::BranchingCensus;
    let size = cfg.size.ok_or_else(|| Error::Config("`size` is required for branching_census".into()))?;
    let (n, seed) = (cfg.n_samples(kind)?, cfg.seed(kind)?);
    let eps = cfg.list(&cfg.eps, "eps", kind)?;
    let side = f64::from(size);
    let window = Rect::new(0.0, 0.0, side, side);
    let g = build_lattice_box(1.0, &window, Boundary::Free)?;
    let counts: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t = wilson_ust(&g, 0, &mut seed_stream(seed, i))?;
            Ok(eps.iter().map(|&e| branching_census(&g, &t, e, &window).count as f64).collect())
        })
        .collect::<Result<_>>()?;
    let rows: Vec<CensusRow> = eps
        .iter()
        .enumerate()
        .map(|(j, &e)| {
            let xs: Vec<f64> = counts.iter().map(|c| c[j]).collect();
            CensusRow {
                schema_version: SCHEMA_VERSION,
                eps: e,
                size,
                n_samples: n,
                mean_count: mean(&xs),
                stderr: if xs.len() > 1 { (variance(&xs) / xs.len() as f64).sqrt() } else { f64::NAN },
                seed,
            }
        })
        .collect();
    Ok(Outcome {
        tables: vec![table("census", &rows)?],
        report: json!({ "eps": eps, "mean_counts": rows.iter().map(|r| r.mean_count).collect::<Vec<_>>() }),
        check: None,
    })
}
