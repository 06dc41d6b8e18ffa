//! Experiment runner: reads a TOML description, runs one analysis, writes
//! CSV tables and a JSON manifest.

pub mod config;
pub mod experiments;
pub mod output;

use config::{ExperimentConfig, Kind};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spantree_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub kind: &'static str,
    pub code_version: String,
    pub seed: Option<u64>,
    pub workers: usize,
    pub config: ExperimentConfig,
    pub files: Vec<PathBuf>,
    pub check: Option<experiments::Check>,
    pub runtime_seconds: f64,
    pub report: serde_json::Value,
}

pub struct RunSummary {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        match &self.manifest.check {
            Some(c) if !c.passed => EXIT_CHECK_FAILED,
            _ => EXIT_OK,
        }
    }
}

/// Runs `kind` with `cfg` and writes `<kind>_*.csv` and
/// `<kind>_manifest.json` into `out`.
pub fn run_experiment(kind: Kind, cfg: &ExperimentConfig, out: &Path) -> Result<RunSummary> {
    if let Some(k) = cfg.kind {
        if k != kind {
            return Err(Error::Config(format!(
                "config is for {} but {} was requested",
                k.name(),
                kind.name()
            )));
        }
    }
    let start = Instant::now();
    let outcome = experiments::run(kind, cfg)?;
    let files = output::write_tables(out, kind.name(), &outcome.tables)?;
    let manifest = Manifest {
        schema_version: output::SCHEMA_VERSION,
        kind: kind.name(),
        code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
        seed: cfg.seed,
        workers: rayon::current_num_threads(),
        config: cfg.clone(),
        files,
        check: outcome.check,
        runtime_seconds: start.elapsed().as_secs_f64(),
        report: outcome.report,
    };
    let manifest_path = out.join(format!("{}_manifest.json", kind.name()));
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunSummary {
        manifest,
        manifest_path,
    })
}
