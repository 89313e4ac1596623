//! Run configuration: one TOML (or JSON) file describing the system, the
//! property, the discretization and the training run.

use std::fs;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use obscert::hyperprops::{ObserverConfig, PropertySpec};
use obscert::oracle::{FiniteInstance, DEFAULT_MEMORY_CAP};
use obscert::poss::{Poss, PossConfig};
use obscert::region::BoxRegion;
use obscert::trainer::TrainConfig;
use obscert::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

/// A finite system given by explicit tables. Probabilities are exact
/// rationals written as strings (`"1/3"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiniteConfig {
    pub coords: Vec<Vec<f64>>,
    pub outputs: Vec<Vec<f64>>,
    pub succ: Vec<Vec<usize>>,
    pub probs: Vec<String>,
    pub initial: Vec<usize>,
    pub horizon: usize,
}

impl FiniteConfig {
    pub fn instance(&self) -> Result<FiniteInstance<BigRational>> {
        let probs = self
            .probs
            .iter()
            .map(|p| p.trim().parse::<BigRational>().map_err(|e| Error::Config(format!("probability {p:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        FiniteInstance::new(
            self.coords.clone(),
            self.outputs.clone(),
            self.succ.clone(),
            probs,
            self.initial.clone(),
            self.horizon,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Discretization {
    /// Box of the DP grid; defaults to the model domain.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dp_region: Option<BoxRegion>,
    pub dp_per_dim: usize,
    pub quadrature_nodes: usize,
    pub candidates: usize,
    pub sigmas: f64,
    pub memory_cap: usize,
    /// Treat states leaving the model domain as the absorbing sink.
    pub domain_sink: bool,
    /// Shrinks the table certificate by this margin before calibration.
    pub table_delta: f64,
    /// Regression steps onto the table certificate before training.
    pub warm_start: bool,
    pub observer: ObserverConfig,
    /// Initial states per dimension in the estimate scan.
    pub estimate_points: usize,
    pub estimate_samples: usize,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            dp_region: None,
            dp_per_dim: 241,
            quadrature_nodes: 9,
            candidates: 21,
            sigmas: 3.0,
            memory_cap: DEFAULT_MEMORY_CAP,
            domain_sink: false,
            table_delta: 0.0,
            warm_start: false,
            observer: ObserverConfig::default(),
            estimate_points: 9,
            estimate_samples: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Trajectories written by `simulate`.
    pub trajectories: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), trajectories: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub precision: Precision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<PossConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finite: Option<FiniteConfig>,
    pub property: PropertySpec,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

pub enum Model {
    Poss(Poss),
    Finite(FiniteInstance<BigRational>),
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        Ok(cfg)
    }

    /// Applies command-line overrides; `--seed` reseeds every stochastic stage.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<&Path>) {
        if let Some(s) = seed {
            self.seed = s;
            self.training.seed = s;
            self.training.validation.seed = s;
        }
        if let Some(o) = out {
            self.output.dir = o.to_path_buf();
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.property.validate()?;
        self.training.validate()?;
        let d = &self.discretization;
        if d.dp_per_dim < 2 || d.candidates == 0 || d.estimate_points == 0 || d.estimate_samples == 0 {
            return Err(Error::Config("discretization sizes must be positive (dp_per_dim at least 2)".into()));
        }
        if !(d.sigmas > 0.0 && d.sigmas.is_finite()) || !(d.table_delta >= 0.0) {
            return Err(Error::Config("discretization.sigmas must be positive and table_delta nonnegative".into()));
        }
        match (&self.system, &self.finite) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(Error::Config("exactly one of [system] and [finite] must be given".into())),
        }
    }

    pub fn model(&self) -> Result<Model> {
        match (&self.system, &self.finite) {
            (Some(s), None) => Ok(Model::Poss(Poss::new(s.clone())?)),
            (None, Some(f)) => Ok(Model::Finite(f.instance()?)),
            _ => Err(Error::Config("exactly one of [system] and [finite] must be given".into())),
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn resolved_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn hash(&self) -> Result<String> {
        let digest = Sha256::digest(self.resolved_json()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}
