//! White-noise augmentation at a fixed signal-to-noise ratio.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::sbd_sim::{IVCurve, CURRENT_FLOOR};

/// How the noise power is tied to the signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// One noise power per curve: mean squared current / 10^(SNR/10).
    PerCurve,
    /// Each point carries its own SNR: std = |I| / 10^(SNR/20).
    #[default]
    PerPoint,
}

/// The zero-mean Gaussian noise that [`add_noise`] would add, before clamping.
pub fn noise_vector<R: Rng + ?Sized>(
    currents: &[f64],
    snr_db: f64,
    model: NoiseModel,
    rng: &mut R,
) -> Vec<f64> {
    if snr_db == f64::INFINITY {
        return vec![0.0; currents.len()];
    }
    let ratio = 10f64.powf(snr_db / 10.0);
    match model {
        NoiseModel::PerCurve => {
            let power =
                currents.iter().map(|i| i * i).sum::<f64>() / currents.len() as f64 / ratio;
            let sigma = power.sqrt();
            currents
                .iter()
                .map(|_| sigma * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
        NoiseModel::PerPoint => {
            let scale = ratio.sqrt().recip();
            currents
                .iter()
                .map(|i| i.abs() * scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
    }
}

/// Adds noise to the 51 currents and clamps at the current floor.
/// `snr_db = +inf` returns the curve unchanged.
pub fn add_noise<R: Rng + ?Sized>(
    curve: &IVCurve,
    snr_db: f64,
    model: NoiseModel,
    rng: &mut R,
) -> IVCurve {
    if snr_db == f64::INFINITY {
        return curve.clone();
    }
    let noise = noise_vector(&curve.currents, snr_db, model, rng);
    IVCurve {
        voltages: curve.voltages.clone(),
        currents: curve
            .currents
            .iter()
            .zip(noise)
            .map(|(i, e)| (i + e).max(CURRENT_FLOOR))
            .collect(),
    }
}

pub fn add_noise_seeded(curve: &IVCurve, snr_db: f64, model: NoiseModel, seed: u64) -> IVCurve {
    add_noise(curve, snr_db, model, &mut rng::stream(seed, &[]))
}
