//! Head losses: plain MSE and the hybrid `lambda * L_phy + L_mse`.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::datagen::ScalerState;
use crate::nn;
use crate::sbd_sim::{SLOT_MU_MAX, SLOT_MU_MIN};

/// One evaluation of the head loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub mse: f64,
    pub phy: f64,
    pub lambda: f64,
}

/// Rectified mobility-ordering penalty in physical units.
///
/// Per sample: `max(0, mu_min - mu_max) / width`, with both mobilities
/// mapped back through the target MinMax scaler; averaged over the batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsPenalty {
    max_offset: f64,
    max_scale: f64,
    min_offset: f64,
    min_scale: f64,
    width: f64,
}

impl PhysicsPenalty {
    /// `width` is the normalisation (the `mu_max` sampling-range width).
    pub fn new(target_scaler: &ScalerState, width: f64) -> Self {
        let unit = target_scaler
            .inverse_transform(&[0.0; 7])
            .expect("target scaler has 7 slots");
        PhysicsPenalty {
            max_offset: unit[SLOT_MU_MAX],
            max_scale: target_scaler.scale(SLOT_MU_MAX),
            min_offset: unit[SLOT_MU_MIN],
            min_scale: target_scaler.scale(SLOT_MU_MIN),
            width,
        }
    }

    fn violation(&self, scaled_max: f64, scaled_min: f64) -> f64 {
        let mu_max = scaled_max * self.max_scale + self.max_offset;
        let mu_min = scaled_min * self.min_scale + self.min_offset;
        (mu_min - mu_max).max(0.0)
    }

    pub fn value(&self, pred: ArrayView2<f64>) -> f64 {
        let n = pred.nrows() as f64;
        pred.rows()
            .into_iter()
            .map(|r| self.violation(r[SLOT_MU_MAX], r[SLOT_MU_MIN]) / self.width)
            .sum::<f64>()
            / n
    }

    /// Value and gradient w.r.t. the scaled predictions. Subgradient 0 at
    /// `mu_min == mu_max`.
    pub fn value_and_grad(&self, pred: ArrayView2<f64>) -> (f64, Array2<f64>) {
        let n = pred.nrows() as f64;
        let mut grad = Array2::zeros(pred.raw_dim());
        let mut total = 0.0;
        for (i, r) in pred.rows().into_iter().enumerate() {
            let v = self.violation(r[SLOT_MU_MAX], r[SLOT_MU_MIN]);
            total += v / self.width;
            if v > 0.0 {
                grad[[i, SLOT_MU_MIN]] = self.min_scale / (self.width * n);
                grad[[i, SLOT_MU_MAX]] = -self.max_scale / (self.width * n);
            }
        }
        (total / n, grad)
    }
}

/// `physics_loss` on scaled predictions (rows of 7 slots).
pub fn physics_loss(pred_scaled: ArrayView2<f64>, target_scaler: &ScalerState, width: f64) -> f64 {
    PhysicsPenalty::new(target_scaler, width).value(pred_scaled)
}

pub trait HeadLoss: Sync {
    fn evaluate(&self, pred: &Array2<f64>, target: ArrayView2<f64>) -> (LossBreakdown, Array2<f64>);
}

/// Pure MSE regression (the AE-NN objective).
pub struct MseLoss;

impl HeadLoss for MseLoss {
    fn evaluate(&self, pred: &Array2<f64>, target: ArrayView2<f64>) -> (LossBreakdown, Array2<f64>) {
        let (mse, grad) = nn::mse(pred, target);
        let b = LossBreakdown {
            total: mse,
            mse,
            phy: 0.0,
            lambda: 0.0,
        };
        (b, grad)
    }
}

pub struct HybridLoss {
    pub lambda: f64,
    pub penalty: PhysicsPenalty,
}

impl HeadLoss for HybridLoss {
    fn evaluate(&self, pred: &Array2<f64>, target: ArrayView2<f64>) -> (LossBreakdown, Array2<f64>) {
        let (mse, mut grad) = nn::mse(pred, target);
        let (phy, phy_grad) = self.penalty.value_and_grad(pred.view());
        if self.lambda != 0.0 {
            grad.zip_mut_with(&phy_grad, |g, &p| {
                if p != 0.0 {
                    *g += self.lambda * p;
                }
            });
        }
        let b = LossBreakdown {
            total: self.lambda * phy + mse,
            mse,
            phy,
            lambda: self.lambda,
        };
        (b, grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{fit_scaler, ScalerKind};
    use ndarray::array;

    const WIDTH: f64 = 1978.0;

    /// Scaler whose MinMax ranges match the sampling ranges.
    fn scaler() -> ScalerState {
        fit_scaler(
            ScalerKind::MinMax,
            &[
                vec![200.0, 5.0, 22.0, 20.0, 17.0, 1.0, 0.5],
                vec![500.0, 5.5, 2000.0, 1810.0, 18.0, 5.0, 5.0],
            ],
        )
        .unwrap()
    }

    fn scaled(mu_max: f64, mu_min: f64) -> Vec<f64> {
        scaler()
            .transform(&[300.0, 5.2, mu_max, mu_min, 17.4, 2.8, 2.3])
            .unwrap()
    }

    #[test]
    fn no_violation_no_penalty() {
        let row = scaled(153.0, 55.0);
        let pred = ndarray::Array2::from_shape_vec((1, 7), row).unwrap();
        assert_eq!(physics_loss(pred.view(), &scaler(), WIDTH), 0.0);
    }

    #[test]
    fn single_violation_in_physical_units() {
        let pred = ndarray::Array2::from_shape_vec((1, 7), scaled(90.0, 100.0)).unwrap();
        let v = physics_loss(pred.view(), &scaler(), WIDTH);
        assert!((v - 10.0 / 1978.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn batch_mean_halves_single_violation() {
        let mut rows = scaled(90.0, 100.0);
        rows.extend(scaled(153.0, 55.0));
        let pred = ndarray::Array2::from_shape_vec((2, 7), rows).unwrap();
        let v = physics_loss(pred.view(), &scaler(), WIDTH);
        assert!((v - 0.5 * 10.0 / 1978.0).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_total_is_mse() {
        let loss = HybridLoss {
            lambda: 0.0,
            penalty: PhysicsPenalty::new(&scaler(), WIDTH),
        };
        let pred = ndarray::Array2::from_shape_vec((1, 7), scaled(90.0, 100.0)).unwrap();
        let target = array![[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]];
        let (b, g) = loss.evaluate(&pred, target.view());
        let (b0, g0) = MseLoss.evaluate(&pred, target.view());
        assert_eq!(b.total, b.mse);
        assert_eq!(b.mse, b0.mse);
        assert!(b.phy > 0.0);
        assert_eq!(g, g0);
    }
}
