//! Versioned JSON checkpoints.
//!
//! Floats are written in shortest round-trip decimal and parsed with exact
//! rounding, so `save -> load -> save` is byte-identical.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, DenseLayer, NetworkModel};
use crate::datagen::ScalerState;
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerRecord {
    pub activation: Activation,
    /// `fan_in` rows of `fan_out` weights.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkRecord {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<LayerRecord>,
}

impl NetworkRecord {
    pub fn from_model(model: &NetworkModel) -> Self {
        NetworkRecord {
            layer_dims: model.layer_dims(),
            layers: model
                .layers()
                .iter()
                .map(|l| LayerRecord {
                    activation: l.activation,
                    weights: l.weights.rows().into_iter().map(|r| r.to_vec()).collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }

    pub fn to_model(&self, name: &str) -> Result<NetworkModel> {
        let dims = &self.layer_dims;
        if dims.len() != self.layers.len() + 1 {
            return Err(Error::Checkpoint(format!(
                "network '{name}': {} layer dims for {} layers",
                dims.len(),
                self.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, rec) in self.layers.iter().enumerate() {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            let bad_shape = rec.weights.len() != fan_in
                || rec.weights.iter().any(|row| row.len() != fan_out)
                || rec.bias.len() != fan_out;
            if bad_shape {
                return Err(Error::Checkpoint(format!(
                    "network '{name}' layer {i}: weights/bias do not match declared dims {fan_in}x{fan_out}"
                )));
            }
            let flat: Vec<f64> = rec.weights.iter().flatten().copied().collect();
            layers.push(DenseLayer {
                weights: Array2::from_shape_vec((fan_in, fan_out), flat).expect("shape checked"),
                bias: Array1::from(rec.bias.clone()),
                activation: rec.activation,
            });
        }
        NetworkModel::from_layers(layers)
            .map_err(|e| Error::Checkpoint(format!("network '{name}': {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    /// "autoencoder" or "head".
    pub kind: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub networks: BTreeMap<String, NetworkRecord>,
    pub input_scaler: Option<ScalerState>,
    pub target_scaler: Option<ScalerState>,
    /// Free-form run metadata (lambda, label, violation counts, ...).
    #[serde(default)]
    pub metadata: BTreeMap<String, serde_json::Value>,
}

impl Checkpoint {
    pub fn new(kind: &str, config_digest: &str, master_seed: u64) -> Self {
        Checkpoint {
            format_version: FORMAT_VERSION,
            kind: kind.to_string(),
            config_digest: config_digest.to_string(),
            master_seed,
            networks: BTreeMap::new(),
            input_scaler: None,
            target_scaler: None,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_network(mut self, name: &str, model: &NetworkModel) -> Self {
        self.networks
            .insert(name.to_string(), NetworkRecord::from_model(model));
        self
    }

    pub fn network(&self, name: &str) -> Result<NetworkModel> {
        self.networks
            .get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing network '{name}'")))?
            .to_model(name)
    }

    pub fn to_json(&self) -> Result<String> {
        for (name, rec) in &self.networks {
            rec.to_model(name)?;
        }
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| Error::Checkpoint(format!("malformed JSON: {e}")))?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::Checkpoint("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(Error::VersionMismatch {
                found: version as u32,
                expected: FORMAT_VERSION,
            });
        }
        let ckpt: Checkpoint = serde_json::from_str(text)
            .map_err(|e| Error::Checkpoint(format!("malformed checkpoint: {e}")))?;
        for (name, rec) in &ckpt.networks {
            rec.to_model(name)?;
        }
        for scaler in ckpt.input_scaler.iter().chain(&ckpt.target_scaler) {
            scaler.validate()?;
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::from_json(&fs::read_to_string(path)?)
    }
}
