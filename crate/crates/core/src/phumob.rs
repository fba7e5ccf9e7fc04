//! Philips unified mobility (low-field part).
//!
//! Only the lattice term and the combined impurity/carrier scattering term
//! are modelled:
//!
//! ```text
//! mu_L    = mu_max (300/T)^theta
//! mu_N    = mu_max^2 / (mu_max - mu_min) (T/300)^(3 alpha - 1.5)
//! mu_c    = mu_max mu_min / (mu_max - mu_min) (300/T)^0.5
//! mu_DAeh = mu_N (N_ref / 6.0e15)^alpha + mu_c
//! 1/mu    = 1/mu_L + 1/mu_DAeh
//! ```
//!
//! Local doping does not enter the scattering term; it only affects the
//! series resistance in [`crate::sbd_sim`].

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Fixed reference concentration inside the impurity-scattering term (cm⁻³).
pub const REFERENCE_CONCENTRATION: f64 = 6.0e15;
/// Temperature at which all `(T/300)` factors are unity (K).
pub const REFERENCE_TEMPERATURE: f64 = 300.0;
pub const MIN_TEMPERATURE: f64 = 100.0;
pub const MAX_TEMPERATURE: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhuMobParams {
    /// cm²/V·s
    pub mu_max: f64,
    /// cm²/V·s
    pub mu_min: f64,
    /// cm⁻³
    pub n_ref: f64,
    pub alpha: f64,
    pub theta: f64,
}

impl PhuMobParams {
    pub fn validate(&self) -> Result<()> {
        let all = [self.mu_max, self.mu_min, self.n_ref, self.alpha, self.theta];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite mobility parameter in {self:?}")));
        }
        if self.mu_min <= 0.0 {
            return Err(Error::Domain(format!("mu_min = {} must be positive", self.mu_min)));
        }
        if self.mu_max <= self.mu_min {
            return Err(Error::Domain(format!(
                "mu_max = {} must exceed mu_min = {}",
                self.mu_max, self.mu_min
            )));
        }
        if self.n_ref <= 0.0 || self.alpha <= 0.0 || self.theta <= 0.0 {
            return Err(Error::Domain(format!(
                "n_ref, alpha and theta must be positive (got {}, {}, {})",
                self.n_ref, self.alpha, self.theta
            )));
        }
        Ok(())
    }
}

/// All intermediate mobilities (cm²/V·s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityComponents {
    pub mu_l: f64,
    pub mu_n: f64,
    pub mu_c: f64,
    pub mu_daeh: f64,
    pub mu_total: f64,
}

pub fn mobility(params: &PhuMobParams, temperature: f64) -> Result<MobilityComponents> {
    params.validate()?;
    if !(MIN_TEMPERATURE..=MAX_TEMPERATURE).contains(&temperature) {
        return Err(Error::Domain(format!(
            "temperature {temperature} K outside [{MIN_TEMPERATURE}, {MAX_TEMPERATURE}] K"
        )));
    }
    let t = temperature / REFERENCE_TEMPERATURE;
    let spread = params.mu_max - params.mu_min;

    let mu_l = params.mu_max * t.powf(-params.theta);
    let mu_n = params.mu_max * params.mu_max / spread * t.powf(3.0 * params.alpha - 1.5);
    let mu_c = params.mu_max * params.mu_min / spread * t.powf(-0.5);
    let mu_daeh = mu_n * (params.n_ref / REFERENCE_CONCENTRATION).powf(params.alpha) + mu_c;
    let mu_total = 1.0 / (1.0 / mu_l + 1.0 / mu_daeh);

    Ok(MobilityComponents {
        mu_l,
        mu_n,
        mu_c,
        mu_daeh,
        mu_total,
    })
}
