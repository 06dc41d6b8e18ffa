//! Result rows shared by the samplers, the analysis layer and the harness.

use crate::grid::Boundary;
use crate::stats::{wilson_interval, z_two_sided};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Model {
    Ust,
    Mst,
    Est,
    Bernoulli,
    Droplet,
    Vacant,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Ust => "UST",
            Model::Mst => "MST",
            Model::Est => "EST",
            Model::Bernoulli => "BERNOULLI",
            Model::Droplet => "DROPLET",
            Model::Vacant => "VACANT",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    /// `r` and `outer` are the shell radii.
    Annulus,
    /// `r` is the width and `outer` the length of the rectangle.
    Rectangle,
}

/// A measured probability (or mean, for moment observables) with its
/// sample count and 95% interval.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub model: Model,
    pub observable: String,
    pub geometry: GeometryKind,
    pub r: f64,
    pub outer: f64,
    pub k: u32,
    pub delta: f64,
    pub bc_inner: Boundary,
    pub bc_outer: Boundary,
    pub n_samples: u64,
    pub successes: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
}

impl EstimateRecord {
    /// A proportion with its Wilson-score 95% interval.
    #[allow(clippy::too_many_arguments)]
    pub fn proportion(
        model: Model,
        observable: &str,
        geometry: GeometryKind,
        (r, outer): (f64, f64),
        k: u32,
        delta: f64,
        (bc_inner, bc_outer): (Boundary, Boundary),
        successes: u64,
        n_samples: u64,
        seed: u64,
    ) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, n_samples, z_two_sided(0.95));
        EstimateRecord {
            model,
            observable: observable.to_string(),
            geometry,
            r,
            outer,
            k,
            delta,
            bc_inner,
            bc_outer,
            n_samples,
            successes,
            p_hat: if n_samples == 0 {
                0.0
            } else {
                successes as f64 / n_samples as f64
            },
            ci_low,
            ci_high,
            seed,
        }
    }

    /// Half-width of the interval expressed as one normal standard error.
    pub fn stderr(&self) -> f64 {
        (self.ci_high - self.ci_low) / (2.0 * z_two_sided(0.95))
    }

    pub fn aspect(&self) -> f64 {
        self.outer / self.r
    }
}

/// Power-law fit of `p ~ K (r/R)^s` over several aspect ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub model: Model,
    pub k: u32,
    pub exponent: f64,
    pub stderr: f64,
    pub log_intercept: f64,
    pub aspect_ratios: Vec<f64>,
    pub residuals: Vec<f64>,
}
