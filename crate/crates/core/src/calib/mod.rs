//! Cohort calibration and closed-loop verification.
//!
//! Per-curve predictions are aggregated into one calibrated mobility
//! parameter set (arithmetic mean, `n_ref` averaged on a log₁₀ axis).
//! Temperatures are averaged within each measurement group and
//! workfunctions stay per-device. Every curve is then re-simulated on the
//! nominal geometry and scored with R² on linear and log₁₀ currents.

pub mod cohort;
pub mod metrics;
pub mod svg;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cohort::{generate_cohort, Cohort, CohortCurve, CohortSpec, CohortTruth, TemperatureGroup};
pub use metrics::{count_violations, quantile_sorted, quartile_stats, r2, QuartileStats};

use crate::datagen::ParameterRanges;
use crate::phumob::PhuMobParams;
use crate::pinn::{predict_batch, Autoencoder, HeadModel, ModelScalers, Prediction};
use crate::sbd_sim::{self, DeviceGeometry, IVCurve, ParamVector};
use crate::{Error, Result};

/// Calibrated quantities shared by a cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub phumob: PhuMobParams,
    /// Mean predicted temperature per group (K).
    pub group_temperatures: Vec<f64>,
    /// Per-curve workfunction used for re-simulation (eV).
    pub workfunctions: Vec<f64>,
}

pub fn aggregate(predictions: &[Prediction], cohort: &Cohort) -> Result<Aggregate> {
    if predictions.len() != cohort.curves.len() {
        return Err(Error::DimensionMismatch {
            context: "predictions vs cohort curves".into(),
            expected: cohort.curves.len(),
            got: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::Domain("cannot aggregate an empty cohort".into()));
    }
    let n = predictions.len() as f64;
    let mean = |f: &dyn Fn(&Prediction) -> f64| predictions.iter().map(f).sum::<f64>() / n;
    let phumob = PhuMobParams {
        mu_max: mean(&|p| p.params.phumob.mu_max),
        mu_min: mean(&|p| p.params.phumob.mu_min),
        n_ref: 10f64.powf(mean(&|p| p.params.phumob.n_ref.log10())),
        alpha: mean(&|p| p.params.phumob.alpha),
        theta: mean(&|p| p.params.phumob.theta),
    };
    let mut sums = vec![(0.0, 0usize); cohort.group_labels.len()];
    for (p, c) in predictions.iter().zip(&cohort.curves) {
        let slot = sums.get_mut(c.group).ok_or_else(|| {
            Error::Domain(format!("curve {} refers to unknown group {}", c.id, c.group))
        })?;
        slot.0 += p.params.temperature;
        slot.1 += 1;
    }
    let group_temperatures = sums
        .iter()
        .map(|&(s, k)| if k == 0 { f64::NAN } else { s / k as f64 })
        .collect();
    Ok(Aggregate {
        phumob,
        group_temperatures,
        workfunctions: predictions.iter().map(|p| p.params.workfunction).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResult {
    pub id: usize,
    pub group: usize,
    /// Per-curve model output (the hidden truth for the reference report).
    pub predicted: ParamVector,
    pub violation: bool,
    /// Re-simulation inputs: group-averaged T and per-curve WF.
    pub temperature: f64,
    pub workfunction: f64,
    pub r2_linear: Option<f64>,
    pub r2_log: Option<f64>,
    /// Why the curve could not be scored.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub label: String,
    pub linear: Option<QuartileStats>,
    pub log: Option<QuartileStats>,
    pub mean_linear: Option<f64>,
    pub mean_log: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub label: String,
    pub lambda: Option<f64>,
    pub phumob: PhuMobParams,
    pub group_temperatures: Vec<f64>,
    /// Per-curve predictions with `mu_min >= mu_max`.
    pub violations: usize,
    pub curves: Vec<CurveResult>,
    /// Filled by [`verify`].
    pub groups: Vec<GroupStats>,
    pub median_linear: Option<f64>,
    pub median_log: Option<f64>,
    pub failed_curves: usize,
    /// Aggregated fields projected onto the sampling ranges before
    /// re-simulation (per-curve predictions stay raw).
    #[serde(default)]
    pub clipped: Vec<String>,
}

impl CalibrationReport {
    /// Curve-level parameters used for re-simulation.
    pub fn resim_params(&self) -> Vec<ParamVector> {
        self.curves
            .iter()
            .map(|c| ParamVector {
                temperature: c.temperature,
                workfunction: c.workfunction,
                phumob: self.phumob,
            })
            .collect()
    }

    /// Linear R² over all scored curves (the box-plot population).
    pub fn linear_scores(&self) -> Vec<f64> {
        self.curves.iter().filter_map(|c| c.r2_linear).collect()
    }

    pub fn log_scores(&self) -> Vec<f64> {
        self.curves.iter().filter_map(|c| c.r2_log).collect()
    }
}

fn score(measured: &IVCurve, simulated: &IVCurve) -> Result<(f64, f64)> {
    let r_lin = r2(&measured.floored(), &simulated.floored())?;
    let r_log = r2(&measured.log_currents(), &simulated.log_currents())?;
    Ok((r_lin, r_log))
}

fn stats_of(values: &[f64]) -> (Option<QuartileStats>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (quartile_stats(values).ok(), Some(mean))
}

fn check_cohort(cohort: &Cohort, n: usize) -> Result<()> {
    if n != cohort.curves.len() {
        return Err(Error::DimensionMismatch {
            context: "per-curve entries vs cohort curves".into(),
            expected: cohort.curves.len(),
            got: n,
        });
    }
    Ok(())
}

fn assemble(
    label: &str,
    lambda: Option<f64>,
    predicted: &[ParamVector],
    agg: Aggregate,
    cohort: &Cohort,
) -> CalibrationReport {
    let curves: Vec<CurveResult> = cohort
        .curves
        .iter()
        .zip(predicted)
        .zip(&agg.workfunctions)
        .map(|((c, p), &wf)| CurveResult {
            id: c.id,
            group: c.group,
            predicted: *p,
            violation: p.phumob.mu_min >= p.phumob.mu_max,
            temperature: agg.group_temperatures[c.group],
            workfunction: wf,
            r2_linear: None,
            r2_log: None,
            error: None,
        })
        .collect();
    CalibrationReport {
        label: label.to_string(),
        lambda,
        phumob: agg.phumob,
        group_temperatures: agg.group_temperatures,
        violations: curves.iter().filter(|c| c.violation).count(),
        curves,
        groups: Vec::new(),
        median_linear: None,
        median_log: None,
        failed_curves: 0,
        clipped: Vec::new(),
    }
}

/// Clips the aggregate into `ranges`: mobility parameters, each group
/// temperature and each workfunction.
pub fn clamp_aggregate(agg: &Aggregate, ranges: &ParameterRanges) -> (Aggregate, Vec<String>) {
    let mut names = BTreeSet::new();
    let mut clamp = |t: f64, wf: f64, phumob: PhuMobParams| {
        let (q, c) = ranges.clamp(&ParamVector {
            temperature: t,
            workfunction: wf,
            phumob,
        });
        names.extend(c);
        q
    };
    let wf_mid = 0.5 * (ranges.workfunction[0] + ranges.workfunction[1]);
    let t_mid = 0.5 * (ranges.temperature[0] + ranges.temperature[1]);
    let phumob = clamp(t_mid, wf_mid, agg.phumob).phumob;
    let group_temperatures = agg
        .group_temperatures
        .iter()
        .map(|&t| clamp(t, wf_mid, phumob).temperature)
        .collect();
    let workfunctions = agg
        .workfunctions
        .iter()
        .map(|&wf| clamp(t_mid, wf, phumob).workfunction)
        .collect();
    (
        Aggregate {
            phumob,
            group_temperatures,
            workfunctions,
        },
        names.into_iter().map(String::from).collect(),
    )
}

/// Predicts every cohort curve, aggregates and clips the aggregate into
/// the sampling ranges. Scores stay empty until [`verify`].
pub fn calibrate(
    ae: &Autoencoder,
    head: &HeadModel,
    scalers: &ModelScalers,
    cohort: &Cohort,
    label: &str,
    lambda: Option<f64>,
) -> Result<CalibrationReport> {
    let curves: Vec<&IVCurve> = cohort.curves.iter().map(|c| &c.curve).collect();
    let predictions = predict_batch(ae, head, &curves, scalers)?;
    let (agg, clipped) = clamp_aggregate(&aggregate(&predictions, cohort)?, &scalers.ranges);
    let predicted: Vec<ParamVector> = predictions.iter().map(|p| p.params).collect();
    Ok(CalibrationReport {
        clipped,
        ..assemble(label, lambda, &predicted, agg, cohort)
    })
}

/// Baseline report built from the hidden truth with the same aggregation
/// as [`calibrate`]. Its residual comes only from noise, geometry spread
/// and within-group temperature averaging.
pub fn reference_report(cohort: &Cohort, truth: &CohortTruth) -> Result<CalibrationReport> {
    check_cohort(cohort, truth.params.len())?;
    let predictions: Vec<Prediction> = truth
        .params
        .iter()
        .map(|p| Prediction {
            params: *p,
            targets: p.to_targets(),
            violation: p.phumob.mu_min >= p.phumob.mu_max,
            in_range: true,
        })
        .collect();
    let agg = aggregate(&predictions, cohort)?;
    Ok(assemble("reference", None, &truth.params, agg, cohort))
}

/// Re-simulates every curve on `geometry` with the calibrated mobility,
/// its group temperature and its own workfunction, then scores it.
/// Simulation failures are recorded per curve.
pub fn verify(report: &CalibrationReport, cohort: &Cohort, geometry: &DeviceGeometry) -> Result<CalibrationReport> {
    check_cohort(cohort, report.curves.len())?;
    geometry.validate()?;
    let params = report.resim_params();
    let scored: Vec<CurveResult> = report
        .curves
        .par_iter()
        .zip(&cohort.curves)
        .zip(&params)
        .map(|((c, measured), p)| {
            let outcome = sbd_sim::simulate(p, geometry).and_then(|sim| score(&measured.curve, &sim));
            let mut out = c.clone();
            match outcome {
                Ok((a, b)) => {
                    out.r2_linear = Some(a);
                    out.r2_log = Some(b);
                    out.error = None;
                }
                Err(e) => {
                    out.r2_linear = None;
                    out.r2_log = None;
                    out.error = Some(e.to_string());
                }
            }
            out
        })
        .collect();

    let collect = |group: Option<usize>, f: fn(&CurveResult) -> Option<f64>| -> Vec<f64> {
        scored
            .iter()
            .filter(|c| group.is_none_or(|g| c.group == g))
            .filter_map(f)
            .collect()
    };
    let groups = cohort
        .group_labels
        .iter()
        .enumerate()
        .map(|(g, label)| {
            let (linear, mean_linear) = stats_of(&collect(Some(g), |c| c.r2_linear));
            let (log, mean_log) = stats_of(&collect(Some(g), |c| c.r2_log));
            GroupStats {
                label: label.clone(),
                linear,
                log,
                mean_linear,
                mean_log,
            }
        })
        .collect();
    let median = |v: Vec<f64>| quartile_stats(&v).ok().map(|s| s.median);
    Ok(CalibrationReport {
        median_linear: median(collect(None, |c| c.r2_linear)),
        median_log: median(collect(None, |c| c.r2_log)),
        failed_curves: scored.iter().filter(|c| c.error.is_some()).count(),
        groups,
        curves: scored,
        ..report.clone()
    })
}
