//! Per-dimension feature and target scaling, fitted on the training split.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerKind {
    MinMax,
    Standard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ScalerState {
    /// Maps `min -> 0`, `max -> 1`.
    MinMax { min: Vec<f64>, max: Vec<f64> },
    /// Zero mean, unit population variance.
    Standard { mean: Vec<f64>, std: Vec<f64> },
}

impl ScalerState {
    pub fn kind(&self) -> ScalerKind {
        match self {
            ScalerState::MinMax { .. } => ScalerKind::MinMax,
            ScalerState::Standard { .. } => ScalerKind::Standard,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            ScalerState::MinMax { min, .. } => min.len(),
            ScalerState::Standard { mean, .. } => mean.len(),
        }
    }

    /// Offset and scale per dimension: `scaled = (x - offset) / scale`.
    fn affine(&self, d: usize) -> (f64, f64) {
        match self {
            ScalerState::MinMax { min, max } => (min[d], max[d] - min[d]),
            ScalerState::Standard { mean, std } => (mean[d], std[d]),
        }
    }

    /// Width of dimension `d` in physical units per scaled unit.
    pub fn scale(&self, d: usize) -> f64 {
        self.affine(d).1
    }

    fn check(&self, len: usize) -> Result<()> {
        if len != self.dims() {
            return Err(Error::DimensionMismatch {
                context: "scaler input".into(),
                expected: self.dims(),
                got: len,
            });
        }
        Ok(())
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(d, v)| {
                let (offset, scale) = self.affine(d);
                (v - offset) / scale
            })
            .collect())
    }

    pub fn inverse_transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x.len())?;
        Ok(x.iter()
            .enumerate()
            .map(|(d, v)| {
                let (offset, scale) = self.affine(d);
                v * scale + offset
            })
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = match self {
            ScalerState::MinMax { min, max } => (min, max),
            ScalerState::Standard { mean, std } => (mean, std),
        };
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                context: "scaler statistics".into(),
                expected: a.len(),
                got: b.len(),
            });
        }
        for d in 0..self.dims() {
            let (offset, scale) = self.affine(d);
            if !offset.is_finite() || !(scale.is_finite() && scale > 0.0) {
                return Err(Error::ZeroVariance { dim: d });
            }
        }
        Ok(())
    }
}

/// Fits a scaler on row-major samples (the training split only).
pub fn fit_scaler(kind: ScalerKind, rows: &[Vec<f64>]) -> Result<ScalerState> {
    let first = rows
        .first()
        .ok_or_else(|| Error::Domain("cannot fit a scaler on zero rows".into()))?;
    let dims = first.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != dims) {
        return Err(Error::DimensionMismatch {
            context: "scaler fit rows".into(),
            expected: dims,
            got: bad.len(),
        });
    }
    let n = rows.len() as f64;
    let state = match kind {
        ScalerKind::MinMax => {
            let mut min = vec![f64::INFINITY; dims];
            let mut max = vec![f64::NEG_INFINITY; dims];
            for r in rows {
                for d in 0..dims {
                    min[d] = min[d].min(r[d]);
                    max[d] = max[d].max(r[d]);
                }
            }
            ScalerState::MinMax { min, max }
        }
        ScalerKind::Standard => {
            let mut mean = vec![0.0; dims];
            for r in rows {
                for d in 0..dims {
                    mean[d] += r[d];
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; dims];
            for r in rows {
                for d in 0..dims {
                    var[d] += (r[d] - mean[d]).powi(2);
                }
            }
            let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
            ScalerState::Standard { mean, std }
        }
    };
    state.validate()?;
    Ok(state)
}
