//! Synthetic pseudo-experimental cohort with hidden ground truth.
//!
//! Devices share one set of mobility parameters. Each device gets its own
//! workfunction, a temperature inside its measurement group, and drift
//! thickness and doping perturbed within `±geometry_spread`. The curves
//! carry measurement noise; the ground truth lives in a separate value
//! that prediction code never receives.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{add_noise, NoiseModel};
use crate::phumob::PhuMobParams;
use crate::rng::{self, purpose};
use crate::sbd_sim::{self, DeviceGeometry, IVCurve, ParamVector};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemperatureGroup {
    pub label: String,
    /// K
    pub range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortSpec {
    pub devices_per_group: usize,
    pub groups: Vec<TemperatureGroup>,
    pub workfunction: [f64; 2],
    pub truth: PhuMobParams,
    /// Relative half-width of the drift thickness/doping perturbation.
    pub geometry_spread: f64,
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub noise_model: NoiseModel,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        let group = |label: &str, lo, hi| TemperatureGroup {
            label: label.to_string(),
            range: [lo, hi],
        };
        CohortSpec {
            devices_per_group: 22,
            groups: vec![
                group("Temp1", 298.0, 308.0),
                group("Temp2", 348.0, 368.0),
                group("Temp3", 403.0, 423.0),
            ],
            workfunction: [5.1, 5.4],
            truth: PhuMobParams {
                mu_max: 153.0,
                mu_min: 55.0,
                n_ref: 10f64.powf(17.4),
                alpha: 2.8,
                theta: 2.3,
            },
            geometry_spread: 0.30,
            snr_db: Some(35.0),
            noise_model: NoiseModel::PerPoint,
            seed: 0,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.devices_per_group == 0 || self.groups.is_empty() {
            return Err(Error::Config("cohort needs at least one device and group".into()));
        }
        for g in &self.groups {
            if !(g.range[0] <= g.range[1] && g.range[0] > 0.0) {
                return Err(Error::Config(format!("group {} has invalid range", g.label)));
            }
        }
        if !(self.workfunction[0] <= self.workfunction[1]) {
            return Err(Error::Config("cohort workfunction range is empty".into()));
        }
        if !(0.0..1.0).contains(&self.geometry_spread) {
            return Err(Error::Config("geometry_spread must lie in [0, 1)".into()));
        }
        self.truth.validate()
    }

    pub fn len(&self) -> usize {
        self.devices_per_group * self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortCurve {
    pub id: usize,
    /// Index into [`Cohort::group_labels`].
    pub group: usize,
    pub curve: IVCurve,
}

/// What the calibration path is allowed to see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub group_labels: Vec<String>,
    pub curves: Vec<CohortCurve>,
}

/// Hidden per-device truth, used only for scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortTruth {
    pub params: Vec<ParamVector>,
    pub geometries: Vec<DeviceGeometry>,
}

pub fn generate_cohort(spec: &CohortSpec, base: &DeviceGeometry) -> Result<(Cohort, CohortTruth)> {
    spec.validate()?;
    base.validate()?;
    let n = spec.len();
    let devices = (0..n)
        .into_par_iter()
        .map(|id| {
            let group = id / spec.devices_per_group;
            let mut r = rng::stream(spec.seed, &[purpose::COHORT, id as u64]);
            let [t_lo, t_hi] = spec.groups[group].range;
            let params = ParamVector {
                temperature: t_lo + (t_hi - t_lo) * r.random::<f64>(),
                workfunction: spec.workfunction[0]
                    + (spec.workfunction[1] - spec.workfunction[0]) * r.random::<f64>(),
                phumob: spec.truth,
            };
            let s = spec.geometry_spread;
            let geometry = DeviceGeometry {
                drift_thickness: base.drift_thickness * (1.0 + s * r.random_range(-1.0..=1.0)),
                drift_doping: base.drift_doping * (1.0 + s * r.random_range(-1.0..=1.0)),
                ..*base
            };
            let clean = sbd_sim::simulate(&params, &geometry)?;
            let curve = match spec.snr_db {
                Some(snr) => {
                    let mut nr = rng::stream(spec.seed, &[purpose::COHORT_NOISE, id as u64]);
                    add_noise(&clean, snr, spec.noise_model, &mut nr)
                }
                None => clean,
            };
            Ok((CohortCurve { id, group, curve }, params, geometry))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut curves = Vec::with_capacity(n);
    let mut params = Vec::with_capacity(n);
    let mut geometries = Vec::with_capacity(n);
    for (c, p, g) in devices {
        curves.push(c);
        params.push(p);
        geometries.push(g);
    }
    Ok((
        Cohort {
            group_labels: spec.groups.iter().map(|g| g.label.clone()).collect(),
            curves,
        },
        CohortTruth { params, geometries },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_cohort_layout() {
        let (cohort, truth) = generate_cohort(&CohortSpec::default(), &DeviceGeometry::default()).unwrap();
        assert_eq!(cohort.curves.len(), 66);
        assert_eq!(truth.params.len(), 66);
        for g in 0..3 {
            assert_eq!(cohort.curves.iter().filter(|c| c.group == g).count(), 22);
        }
        for (c, p) in cohort.curves.iter().zip(&truth.params) {
            let range = CohortSpec::default().groups[c.group].range;
            assert!(p.temperature >= range[0] && p.temperature <= range[1]);
            assert_eq!(p.phumob, CohortSpec::default().truth);
        }
        for g in &truth.geometries {
            let r = g.drift_thickness / DeviceGeometry::default().drift_thickness;
            assert!((0.7..=1.3).contains(&r));
        }
    }

    #[test]
    fn noise_free_cohort_reproduces_simulation() {
        let spec = CohortSpec {
            snr_db: None,
            devices_per_group: 2,
            ..CohortSpec::default()
        };
        let (cohort, truth) = generate_cohort(&spec, &DeviceGeometry::default()).unwrap();
        for (c, (p, g)) in cohort.curves.iter().zip(truth.params.iter().zip(&truth.geometries)) {
            assert_eq!(c.curve, sbd_sim::simulate(p, g).unwrap());
        }
    }
}
