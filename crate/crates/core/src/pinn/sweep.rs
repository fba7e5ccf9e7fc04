//! Penalty-weight sweep: one full head training per lambda.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate_head, hybrid_loss, split_violations, train_head, Autoencoder, TrainConfig};
use crate::datagen::{Dataset, Split};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub val_total: f64,
    pub val_mse: f64,
    pub val_phy: f64,
    pub test_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Grid values where validation total loss is a strict local minimum.
    pub local_minima: Vec<f64>,
}

/// Indices that are strictly below every existing neighbour.
pub fn local_minima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let left = i == 0 || values[i] < values[i - 1];
            let right = i + 1 == n || values[i] < values[i + 1];
            left && right
        })
        .collect()
}

/// Trains one head per grid value with a shared seed; entries run on the
/// current rayon pool and are independent of its size.
pub fn sweep_lambda(ae: &Autoencoder, dataset: &Dataset, grid: &[f64], cfg: &TrainConfig) -> Result<SweepTable> {
    if grid.is_empty() {
        return Err(Error::Config("lambda grid is empty".into()));
    }
    let rows = grid
        .par_iter()
        .map(|&lambda| {
            let run = || -> Result<SweepRow> {
                let cfg = TrainConfig {
                    lambda,
                    ..cfg.clone()
                };
                let (head, _) = train_head(ae, dataset, &cfg)?;
                let val = evaluate_head(ae, &head, dataset, Split::Validation, &hybrid_loss(dataset, lambda))?
                    .ok_or_else(|| Error::Domain("validation split is empty".into()))?;
                Ok(SweepRow {
                    lambda,
                    val_total: val.total,
                    val_mse: val.mse,
                    val_phy: val.phy,
                    test_violations: split_violations(ae, &head, dataset, Split::Test)?,
                })
            };
            run().map_err(|e| Error::Sweep {
                lambda,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let totals: Vec<f64> = rows.iter().map(|r| r.val_total).collect();
    let local_minima = local_minima(&totals).into_iter().map(|i| rows[i].lambda).collect();
    Ok(SweepTable { rows, local_minima })
}
