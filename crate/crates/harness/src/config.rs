//! Experiment descriptions read from TOML files.

use crate::{Error, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use spantree_core::{AnnulusSpec, Boundary, Model, Point};
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Kind {
    CrossingProb,
    FitGamma,
    GeometricDecay,
    Telescopic,
    Mgf,
    QuadraticGrowth,
    Rectangle,
    DeltaStability,
    Choking,
    DropletPc,
    BoxCounting,
    BranchingCensus,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::CrossingProb => "crossing_prob",
            Kind::FitGamma => "fit_gamma",
            Kind::GeometricDecay => "geometric_decay",
            Kind::Telescopic => "telescopic",
            Kind::Mgf => "mgf",
            Kind::QuadraticGrowth => "quadratic_growth",
            Kind::Rectangle => "rectangle",
            Kind::DeltaStability => "delta_stability",
            Kind::Choking => "choking",
            Kind::DropletPc => "droplet_pc",
            Kind::BoxCounting => "box_counting",
            Kind::BranchingCensus => "branching_census",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Free,
    Wired,
}

impl From<Bc> for Boundary {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Free => Boundary::Free,
            Bc::Wired => Boundary::Wired,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Segment,
    Square,
    UstBranch,
}

/// One experiment. Keys a kind does not use are accepted and ignored;
/// keys no kind knows are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Option<Kind>,
    pub model: Option<Model>,
    /// Inner radius; defaults to 1.
    pub r: Option<f64>,
    /// Outer radius `R`. Alternatively give `aspect = R / r`.
    pub outer: Option<f64>,
    pub aspect: Option<f64>,
    pub aspects: Option<Vec<f64>>,
    pub bc_inner: Option<Bc>,
    pub bc_outer: Option<Bc>,
    /// Mesh size. Alternatively give `resolution = r / delta`.
    pub delta: Option<f64>,
    pub resolution: Option<f64>,
    pub resolutions: Option<Vec<f64>>,
    pub k: Option<u32>,
    pub k_max: Option<u32>,
    pub ks: Option<Vec<u32>>,
    pub n_samples: Option<u64>,
    pub seed: Option<u64>,
    pub radii: Option<Vec<f64>>,
    pub ell: Option<f64>,
    pub sigma: Option<f64>,
    pub margin: Option<f64>,
    pub t: Option<f64>,
    pub min_successes: Option<u64>,
    pub width: Option<f64>,
    pub height: Option<f64>,
    pub curve: Option<CurveKind>,
    /// Side of the square box, in lattice steps.
    pub size: Option<u32>,
    pub eps: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

fn missing(key: &str, kind: Kind) -> Error {
    Error::Config(format!("`{key}` is required for {}", kind.name()))
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("`{key}` must be positive, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Every numeric parameter that is present must be positive.
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("r", self.r),
            ("outer", self.outer),
            ("aspect", self.aspect),
            ("delta", self.delta),
            ("resolution", self.resolution),
            ("ell", self.ell),
            ("sigma", self.sigma),
            ("margin", self.margin),
            ("t", self.t),
            ("width", self.width),
            ("height", self.height),
        ];
        for (key, v) in scalars {
            if let Some(v) = v {
                positive(key, v)?;
            }
        }
        let lists = [
            ("aspects", &self.aspects),
            ("resolutions", &self.resolutions),
            ("radii", &self.radii),
            ("eps", &self.eps),
        ];
        for (key, list) in lists {
            if let Some(list) = list {
                if list.is_empty() {
                    return Err(Error::Config(format!("`{key}` is empty")));
                }
                for &v in list {
                    positive(key, v)?;
                }
            }
        }
        let counts = [
            ("k", self.k.map(u64::from)),
            ("k_max", self.k_max.map(u64::from)),
            ("n_samples", self.n_samples),
            ("min_successes", self.min_successes),
            ("size", self.size.map(u64::from)),
        ];
        for (key, v) in counts {
            if v == Some(0) {
                return Err(Error::Config(format!("`{key}` must be positive")));
            }
        }
        if let Some(ks) = &self.ks {
            if ks.is_empty() || ks.contains(&0) {
                return Err(Error::Config("`ks` must be a nonempty list of positive integers".into()));
            }
        }
        if self.margin.is_some_and(|m| m >= 1.0) {
            return Err(Error::Config("`margin` must be below 1".into()));
        }
        if self.delta.is_some() && self.resolution.is_some() {
            return Err(Error::Config("give either `delta` or `resolution`, not both".into()));
        }
        if self.outer.is_some() && self.aspect.is_some() {
            return Err(Error::Config("give either `outer` or `aspect`, not both".into()));
        }
        Ok(())
    }

    pub fn model(&self, kind: Kind) -> Result<Model> {
        self.model.ok_or_else(|| missing("model", kind))
    }

    pub fn seed(&self, kind: Kind) -> Result<u64> {
        self.seed.ok_or_else(|| missing("seed", kind))
    }

    pub fn n_samples(&self, kind: Kind) -> Result<u64> {
        self.n_samples.ok_or_else(|| missing("n_samples", kind))
    }

    pub fn k(&self, kind: Kind) -> Result<u32> {
        self.k.ok_or_else(|| missing("k", kind))
    }

    pub fn r(&self) -> f64 {
        self.r.unwrap_or(1.0)
    }

    pub fn outer(&self, kind: Kind) -> Result<f64> {
        match (self.outer, self.aspect) {
            (Some(o), _) => Ok(o),
            (None, Some(a)) => Ok(a * self.r()),
            (None, None) => Err(missing("outer` or `aspect", kind)),
        }
    }

    pub fn delta(&self, kind: Kind) -> Result<f64> {
        match (self.delta, self.resolution) {
            (Some(d), _) => Ok(d),
            (None, Some(res)) => Ok(self.r() / res),
            (None, None) => Err(missing("delta` or `resolution", kind)),
        }
    }

    pub fn bc(&self) -> (Boundary, Boundary) {
        (
            self.bc_inner.unwrap_or(Bc::Free).into(),
            self.bc_outer.unwrap_or(Bc::Wired).into(),
        )
    }

    pub fn annulus(&self, kind: Kind) -> Result<AnnulusSpec> {
        let (bi, bo) = self.bc();
        Ok(AnnulusSpec::new(Point::ORIGIN, self.r(), self.outer(kind)?, bi, bo)?)
    }

    pub fn list<T: Clone>(&self, v: &Option<Vec<T>>, key: &str, kind: Kind) -> Result<Vec<T>> {
        v.clone().ok_or_else(|| missing(key, kind))
    }

    pub fn get(&self, v: Option<f64>, key: &str, kind: Kind) -> Result<f64> {
        v.ok_or_else(|| missing(key, kind))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let cfg = ExperimentConfig::from_toml(
            r#"
            kind = "crossing_prob"
            model = "UST"
            aspect = 3.0
            resolution = 16.0
            k = 2
            n_samples = 100
            seed = 7
            bc_inner = "free"
            bc_outer = "wired"
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.kind, Some(Kind::CrossingProb));
        assert_eq!(cfg.model, Some(Model::Ust));
        assert_eq!(cfg.outer(Kind::CrossingProb).unwrap(), 3.0);
        assert_eq!(cfg.delta(Kind::CrossingProb).unwrap(), 1.0 / 16.0);
        assert_eq!(cfg.bc(), (Boundary::Free, Boundary::Wired));
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ExperimentConfig::from_toml("model = \"UST\"\nsamples = 10\n").unwrap_err();
        assert!(err.to_string().contains("samples"), "{err}");
    }

    #[test]
    fn unknown_kind_is_an_error() {
        assert!(ExperimentConfig::from_toml("kind = \"teleport\"").is_err());
    }

    #[test]
    fn nonpositive_values_are_rejected() {
        for text in ["delta = 0.0", "aspects = [2.0, -1.0]", "n_samples = 0", "ks = []", "margin = 1.5", "r = nan"] {
            let cfg = ExperimentConfig::from_toml(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
    }

    #[test]
    fn conflicting_keys_are_rejected() {
        let cfg = ExperimentConfig::from_toml("delta = 0.1\nresolution = 8.0").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig::from_toml("outer = 3.0\naspect = 3.0").unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn missing_seed_is_reported() {
        let cfg = ExperimentConfig::default();
        let err = cfg.seed(Kind::Mgf).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }
}
