//! Training-corpus generation: constrained LHS, forward simulation, split
//! assignment, noise augmentation and scaling.

pub mod lhs;
pub mod noise;
pub mod scaler;
pub mod splits;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use lhs::{lhs_draw, lhs_sample, LhsDraw};
pub use noise::{add_noise, add_noise_seeded, noise_vector, NoiseModel};
pub use scaler::{fit_scaler, ScalerKind, ScalerState};
pub use splits::{assign_splits, split_counts, Split};

use crate::sbd_sim::{self, DeviceGeometry, IVCurve, ParamVector, N_TARGETS};
use crate::{Error, Result};

/// Closed sampling intervals. `n_ref` is sampled on a log₁₀ axis and
/// `mu_max` is derived from `mu_min + delta_mu`, clipped at `mu_max[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParameterRanges {
    pub temperature: [f64; 2],
    pub workfunction: [f64; 2],
    pub mu_max: [f64; 2],
    pub mu_min: [f64; 2],
    pub delta_mu: [f64; 2],
    pub n_ref: [f64; 2],
    pub alpha: [f64; 2],
    pub theta: [f64; 2],
}

impl Default for ParameterRanges {
    fn default() -> Self {
        ParameterRanges {
            temperature: [200.0, 500.0],
            workfunction: [5.0, 5.5],
            mu_max: [22.0, 2000.0],
            mu_min: [20.0, 1810.0],
            delta_mu: [2.0, 1980.0],
            n_ref: [1e17, 1e18],
            alpha: [1.0, 5.0],
            theta: [0.5, 5.0],
        }
    }
}

impl ParameterRanges {
    fn named(&self) -> [(&'static str, [f64; 2]); 8] {
        [
            ("temperature", self.temperature),
            ("workfunction", self.workfunction),
            ("mu_max", self.mu_max),
            ("mu_min", self.mu_min),
            ("delta_mu", self.delta_mu),
            ("n_ref", self.n_ref),
            ("alpha", self.alpha),
            ("theta", self.theta),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, [lo, hi]) in self.named() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Config(format!("range {name} = [{lo}, {hi}] is empty")));
            }
        }
        if self.n_ref[0] <= 0.0 || self.mu_min[0] <= 0.0 || self.delta_mu[0] <= 0.0 {
            return Err(Error::Config(
                "n_ref, mu_min and delta_mu ranges must be strictly positive".into(),
            ));
        }
        if self.mu_min[1] >= self.mu_max[1] {
            return Err(Error::Config(
                "mu_min upper bound must lie below the mu_max ceiling".into(),
            ));
        }
        Ok(())
    }

    /// Projects a vector onto the generation box; returns the names of the
    /// clipped fields.
    pub fn clamp(&self, p: &ParamVector) -> (ParamVector, Vec<&'static str>) {
        let mut clipped = Vec::new();
        let mut clip = |name: &'static str, r: [f64; 2], v: f64| {
            let c = v.clamp(r[0], r[1]);
            if c != v {
                clipped.push(name);
            }
            c
        };
        let q = ParamVector {
            temperature: clip("temperature", self.temperature, p.temperature),
            workfunction: clip("workfunction", self.workfunction, p.workfunction),
            phumob: crate::phumob::PhuMobParams {
                mu_max: clip("mu_max", self.mu_max, p.phumob.mu_max),
                mu_min: clip("mu_min", self.mu_min, p.phumob.mu_min),
                n_ref: clip("n_ref", self.n_ref, p.phumob.n_ref),
                alpha: clip("alpha", self.alpha, p.phumob.alpha),
                theta: clip("theta", self.theta, p.phumob.theta),
            },
        };
        (q, clipped)
    }

    /// Whether a (possibly predicted) vector lies inside the generation box.
    pub fn contains(&self, p: &ParamVector) -> bool {
        let inside = |r: [f64; 2], v: f64| v >= r[0] && v <= r[1];
        inside(self.temperature, p.temperature)
            && inside(self.workfunction, p.workfunction)
            && inside(self.mu_max, p.phumob.mu_max)
            && inside(self.mu_min, p.phumob.mu_min)
            && inside(self.n_ref, p.phumob.n_ref)
            && inside(self.alpha, p.phumob.alpha)
            && inside(self.theta, p.phumob.theta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub ranges: ParameterRanges,
    #[serde(default = "default_split_fractions")]
    pub split_fractions: [f64; 3],
}

pub fn default_split_fractions() -> [f64; 3] {
    [0.72, 0.13, 0.15]
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            n_samples: 5891,
            seed: 0,
            ranges: ParameterRanges::default(),
            split_fractions: default_split_fractions(),
        }
    }
}

impl SamplingConfig {
    /// Requirements for building a dataset (stricter than for a bare LHS draw).
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::Config(format!(
                "n_samples = {} is below the minimum of 10",
                self.n_samples
            )));
        }
        let f = self.split_fractions;
        if f.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-12
        {
            return Err(Error::Config(format!("split fractions {f:?} must sum to 1")));
        }
        self.ranges.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub curve: IVCurve,
    pub params: ParamVector,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub sampling: SamplingConfig,
    pub geometry: DeviceGeometry,
    pub records: Vec<Record>,
    /// Standard scaler over log₁₀ currents.
    pub input_scaler: ScalerState,
    /// MinMax scaler over the 7 targets.
    pub target_scaler: ScalerState,
}

/// log₁₀ of the 51 floored currents: the representation the input scaler sees.
pub fn log_transform_currents(curve: &IVCurve) -> Vec<f64> {
    curve.log_currents()
}

impl Dataset {
    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.split == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn split_records(&self, split: Split) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.split == split)
    }

    /// Scaled features of a (possibly noisy) curve.
    pub fn scaled_features(&self, curve: &IVCurve) -> Result<Vec<f64>> {
        self.input_scaler.transform(&log_transform_currents(curve))
    }

    pub fn scaled_targets(&self, params: &ParamVector) -> Result<Vec<f64>> {
        self.target_scaler.transform(&params.to_targets())
    }

    pub fn validate(&self) -> Result<()> {
        for (i, r) in self.records.iter().enumerate() {
            if r.params.phumob.mu_max <= r.params.phumob.mu_min {
                return Err(Error::Domain(format!("record {i} violates mu_max > mu_min")));
            }
            if r.params.phumob.n_ref < self.sampling.ranges.n_ref[0] {
                return Err(Error::Domain(format!("record {i} has n_ref below the floor")));
            }
            if r.curve.currents.len() != sbd_sim::N_CURRENTS {
                return Err(Error::DimensionMismatch {
                    context: format!("record {i} currents"),
                    expected: sbd_sim::N_CURRENTS,
                    got: r.curve.currents.len(),
                });
            }
        }
        self.input_scaler.validate()?;
        self.target_scaler.validate()?;
        if self.input_scaler.dims() != sbd_sim::N_CURRENTS || self.target_scaler.dims() != N_TARGETS {
            return Err(Error::Domain("scaler dimensions do not match the record layout".into()));
        }
        Ok(())
    }
}

/// Fits the input (standard, log currents) and target (minmax) scalers on
/// the training records only.
pub fn fit_scalers(records: &[Record]) -> Result<(ScalerState, ScalerState)> {
    let train: Vec<&Record> = records.iter().filter(|r| r.split == Split::Train).collect();
    let features: Vec<Vec<f64>> = train.iter().map(|r| log_transform_currents(&r.curve)).collect();
    let targets: Vec<Vec<f64>> = train.iter().map(|r| r.params.to_targets().to_vec()).collect();
    Ok((
        fit_scaler(ScalerKind::Standard, &features)?,
        fit_scaler(ScalerKind::MinMax, &targets)?,
    ))
}

/// Samples, simulates, splits and fits scalers. Simulation runs on the
/// current rayon pool; the result does not depend on its size.
pub fn generate_dataset(sampling: &SamplingConfig, geometry: &DeviceGeometry) -> Result<Dataset> {
    sampling.validate()?;
    geometry.validate()?;
    let params = lhs_sample(sampling);
    let curves = params
        .par_iter()
        .map(|p| sbd_sim::simulate(p, geometry))
        .collect::<Result<Vec<_>>>()?;
    let tags = assign_splits(params.len(), sampling.split_fractions, sampling.seed);
    let records: Vec<Record> = curves
        .into_iter()
        .zip(params)
        .zip(tags)
        .map(|((curve, params), split)| Record { curve, params, split })
        .collect();
    let (input_scaler, target_scaler) = fit_scalers(&records)?;
    let dataset = Dataset {
        sampling: sampling.clone(),
        geometry: *geometry,
        records,
        input_scaler,
        target_scaler,
    };
    dataset.validate()?;
    Ok(dataset)
}
