//! Single-file run configuration.
//!
//! Every section has defaults, so a config file only lists what it changes.
//! Section-level `seed` fields are overwritten from `master_seed` by
//! [`RunConfig::resolve`]; streams are separated by purpose tags instead.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calib::CohortSpec;
use crate::datagen::SamplingConfig;
use crate::pinn::TrainConfig;
use crate::sbd_sim::DeviceGeometry;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// One head per entry; 0 yields the AE-NN baseline.
    pub lambdas: Vec<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            lambdas: vec![0.0, 0.02],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub grid: Vec<f64>,
    /// Epoch cap per sweep entry; `None` uses `head.max_epochs`.
    pub max_epochs: Option<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            grid: vec![0.0, 0.02, 0.04, 0.06, 0.08, 0.1, 0.12, 0.14, 0.16, 0.18, 0.2],
            max_epochs: None,
        }
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub master_seed: u64,
    pub out_dir: Option<PathBuf>,
    /// Worker cap; results do not depend on it.
    pub threads: Option<usize>,
    pub sampling: SamplingConfig,
    pub geometry: DeviceGeometry,
    pub autoencoder: TrainConfig,
    pub head: TrainConfig,
    pub train: TrainSection,
    pub sweep: SweepSection,
    pub cohort: CohortSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            master_seed: 0,
            out_dir: None,
            threads: None,
            sampling: SamplingConfig::default(),
            geometry: DeviceGeometry::default(),
            autoencoder: TrainConfig {
                lambda: 0.0,
                ..TrainConfig::default()
            },
            head: TrainConfig::default(),
            train: TrainSection::default(),
            sweep: SweepSection::default(),
            cohort: CohortSpec::default(),
        }
    }
}

impl RunConfig {
    /// Desk-scale preset: 2,000 curves, otherwise the defaults.
    pub fn desk() -> Self {
        let mut cfg = RunConfig::default();
        cfg.sampling.n_samples = 2000;
        cfg
    }

    /// Parses, resolves seeds and validates.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
        let cfg = cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Copies `master_seed` into every section seed.
    pub fn resolve(mut self) -> Self {
        self.sampling.seed = self.master_seed;
        self.autoencoder.seed = self.master_seed;
        self.head.seed = self.master_seed;
        self.cohort.seed = self.master_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.sampling.validate()?;
        self.geometry.validate()?;
        self.autoencoder.validate()?;
        self.head.validate()?;
        self.cohort.validate()?;
        if self.train.lambdas.is_empty() {
            return Err(Error::Config("train.lambdas is empty".into()));
        }
        for &l in self.train.lambdas.iter().chain(&self.sweep.grid) {
            if !(l.is_finite() && l >= 0.0) {
                return Err(Error::Config(format!("lambda {l} must be finite and >= 0")));
            }
        }
        if self.sweep.grid.is_empty() {
            return Err(Error::Config("sweep.grid is empty".into()));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        Ok(())
    }

    /// Head training config for one lambda.
    pub fn head_config(&self, lambda: f64) -> TrainConfig {
        TrainConfig {
            lambda,
            ..self.head.clone()
        }
    }

    pub fn sweep_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.sweep.max_epochs.unwrap_or(self.head.max_epochs),
            ..self.head.clone()
        }
    }

    /// SHA-256 of the canonical JSON with run-local knobs removed
    /// (`out_dir`, `threads`, `train.lambdas`, `head.lambda`), so heads
    /// trained with different lambdas share one digest.
    pub fn digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().expect("config is an object");
        obj.remove("out_dir");
        obj.remove("threads");
        if let Some(t) = obj.get_mut("train").and_then(|t| t.as_object_mut()) {
            t.remove("lambdas");
        }
        if let Some(h) = obj.get_mut("head").and_then(|h| h.as_object_mut()) {
            h.remove("lambda");
        }
        let canonical = serde_json::to_string(&v).expect("value serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
