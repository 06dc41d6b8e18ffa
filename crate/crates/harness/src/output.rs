//! CSV rows and the run manifest.

use crate::Result;
use serde::Serialize;
use spantree_core::grid::Boundary;
use spantree_core::{EstimateRecord, ExponentFit};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

fn bc_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Free => "free",
        Boundary::Wired => "wired",
    }
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

#[derive(Serialize)]
pub struct EstimateRow {
    pub schema_version: u32,
    pub model: &'static str,
    pub observable: String,
    pub geometry: &'static str,
    pub r: f64,
    pub outer: f64,
    pub k: u32,
    pub delta: f64,
    pub bc_inner: &'static str,
    pub bc_outer: &'static str,
    pub n_samples: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl From<&EstimateRecord> for EstimateRow {
    fn from(e: &EstimateRecord) -> Self {
        EstimateRow {
            schema_version: SCHEMA_VERSION,
            model: e.model.name(),
            observable: e.observable.clone(),
            geometry: match e.geometry {
                spantree_core::record::GeometryKind::Annulus => "annulus",
                spantree_core::record::GeometryKind::Rectangle => "rectangle",
            },
            r: e.r,
            outer: e.outer,
            k: e.k,
            delta: e.delta,
            bc_inner: bc_name(e.bc_inner),
            bc_outer: bc_name(e.bc_outer),
            n_samples: e.n_samples,
            successes: e.successes,
            p_hat: e.p_hat,
            ci_low: e.ci_low,
            ci_high: e.ci_high,
            seed: e.seed,
        }
    }
}

/// Lists are `;`-separated.
#[derive(Serialize)]
pub struct FitRow {
    pub schema_version: u32,
    pub model: &'static str,
    pub k: u32,
    pub exponent: f64,
    pub stderr: f64,
    pub log_intercept: f64,
    pub aspect_ratios: String,
    pub residuals: String,
}

impl From<&ExponentFit> for FitRow {
    fn from(f: &ExponentFit) -> Self {
        FitRow {
            schema_version: SCHEMA_VERSION,
            model: f.model.name(),
            k: f.k,
            exponent: f.exponent,
            stderr: f.stderr,
            log_intercept: f.log_intercept,
            aspect_ratios: join(&f.aspect_ratios),
            residuals: join(&f.residuals),
        }
    }
}

#[derive(Serialize)]
pub struct RatioRow {
    pub schema_version: u32,
    pub model: &'static str,
    pub k: u32,
    pub successes: u64,
    pub trials: u64,
    pub ratio: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub margin: f64,
}

#[derive(Serialize)]
pub struct MgfRow {
    pub schema_version: u32,
    pub model: &'static str,
    pub r: f64,
    pub outer: f64,
    pub delta: f64,
    pub t: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub seed: u64,
}

#[derive(Serialize)]
pub struct ScaleRow {
    pub schema_version: u32,
    pub curve: &'static str,
    pub scale: f64,
    pub count: u64,
}

#[derive(Serialize)]
pub struct DimensionRow {
    pub schema_version: u32,
    pub curve: &'static str,
    pub n_points: usize,
    pub slope: f64,
    pub stderr: f64,
    pub fit_low: f64,
    pub fit_high: f64,
    pub seed: u64,
}

#[derive(Serialize)]
pub struct CensusRow {
    pub schema_version: u32,
    pub eps: f64,
    pub size: u32,
    pub n_samples: u64,
    pub mean_count: f64,
    pub stderr: f64,
    pub seed: u64,
}

/// A named CSV file, already rendered.
pub struct Table {
    pub name: String,
    pub bytes: Vec<u8>,
}

pub fn table<T: Serialize>(name: &str, rows: &[T]) -> Result<Table> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    Ok(Table {
        name: name.to_string(),
        bytes,
    })
}

/// Writes the tables as `<kind>_<name>.csv` under `dir`, returning the paths.
pub fn write_tables(dir: &Path, kind: &str, tables: &[Table]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    tables
        .iter()
        .map(|t| {
            let path = dir.join(format!("{kind}_{}.csv", t.name));
            std::fs::write(&path, &t.bytes)?;
            Ok(path)
        })
        .collect()
}
