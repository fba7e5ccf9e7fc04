use serde::{Deserialize, Serialize};

use crate::pinn::Prediction;
use crate::{Error, Result};

/// Coefficient of determination `1 - SS_res / SS_tot`.
pub fn r2(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            context: "r2 inputs".into(),
            expected: actual.len(),
            got: predicted.len(),
        });
    }
    if actual.len() < 2 {
        return Err(Error::Domain("r2 needs at least two points".into()));
    }
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_tot: f64 = actual.iter().map(|a| (a - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantActual);
    }
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Five-number summary for box plots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuartileStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation between order statistics: position
/// `p (n - 1)` in the sorted sample (the common "type 7" convention).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quartile_stats(values: &[f64]) -> Result<QuartileStats> {
    if values.is_empty() {
        return Err(Error::Domain("quartiles of an empty set".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Domain("quartiles of a set containing NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(QuartileStats {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// Predictions with `mu_min >= mu_max`.
pub fn count_violations(predictions: &[Prediction]) -> usize {
    predictions.iter().filter(|p| p.violation).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phumob::PhuMobParams;
    use crate::sbd_sim::ParamVector;
    use rand::Rng;

    #[test]
    fn perfect_fit() {
        let y = [1.0, 4.0, 9.0];
        assert_eq!(r2(&y, &y).unwrap(), 1.0);
    }

    #[test]
    fn mean_prediction_scores_zero() {
        let y = [1.0, 2.0, 6.0];
        assert_eq!(r2(&y, &[3.0, 3.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn hand_computed_half() {
        assert_eq!(r2(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap(), 0.5);
    }

    #[test]
    fn constant_actual_is_an_error() {
        assert!(matches!(r2(&[2.0, 2.0], &[1.0, 3.0]), Err(Error::ConstantActual)));
        assert!(r2(&[1.0], &[1.0]).is_err());
        assert!(r2(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn quartile_examples() {
        let one = quartile_stats(&[1.0]).unwrap();
        assert_eq!([one.min, one.q1, one.median, one.q3, one.max], [1.0; 5]);
        let four = quartile_stats(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(four.median, 2.5);
        assert_eq!(four.q1, 1.75);
        assert_eq!(four.q3, 3.25);
        assert!(quartile_stats(&[]).is_err());
    }

    /// Brute-force quantile: counts how many points lie below each
    /// candidate rank and interpolates between neighbouring ranks.
    fn rank_oracle(values: &[f64], p: f64) -> f64 {
        let n = values.len();
        let kth = |k: usize| {
            *values
                .iter()
                .find(|&&v| {
                    let below = values.iter().filter(|&&w| w < v).count();
                    let equal = values.iter().filter(|&&w| w == v).count();
                    below <= k && k < below + equal
                })
                .unwrap()
        };
        let h = p * (n - 1) as f64;
        let lo = h.floor() as usize;
        kth(lo) + (h - lo as f64) * (kth((lo + 1).min(n - 1)) - kth(lo))
    }

    #[test]
    fn quartiles_match_rank_oracle() {
        let mut r = crate::rng::stream(77, &[]);
        let values: Vec<f64> = (0..100).map(|_| r.random_range(-1.0..1.0)).collect();
        let q = quartile_stats(&values).unwrap();
        for (got, p) in [(q.min, 0.0), (q.q1, 0.25), (q.median, 0.5), (q.q3, 0.75), (q.max, 1.0)] {
            assert!((got - rank_oracle(&values, p)).abs() < 1e-15);
        }
        assert!(q.min <= q.q1 && q.q1 <= q.median && q.median <= q.q3 && q.q3 <= q.max);
    }

    fn pred(mu_max: f64, mu_min: f64) -> Prediction {
        let params = ParamVector {
            temperature: 300.0,
            workfunction: 5.2,
            phumob: PhuMobParams {
                mu_max,
                mu_min,
                n_ref: 1e17,
                alpha: 2.0,
                theta: 2.0,
            },
        };
        Prediction {
            params,
            targets: params.to_targets(),
            violation: mu_min >= mu_max,
            in_range: true,
        }
    }

    #[test]
    fn violation_counting() {
        let ok: Vec<_> = (0..5).map(|k| pred(200.0 + k as f64, 50.0)).collect();
        assert_eq!(count_violations(&ok), 0);
        let mut mixed = ok.clone();
        mixed.extend([pred(50.0, 60.0), pred(10.0, 10.0), pred(30.0, 500.0)]);
        assert_eq!(count_violations(&mixed), 3);
    }
}
