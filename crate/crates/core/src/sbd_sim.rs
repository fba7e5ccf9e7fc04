//! Compact forward-bias model of a vertical Ga₂O₃ Schottky barrier diode.
//!
//! Thermionic emission over the barrier `WF - chi` in series with the drift
//! layer resistance. The drift resistance uses the total low-field mobility
//! from [`crate::phumob`], which is how the mobility parameters reach the
//! on-state current.

use serde::{Deserialize, Serialize};

use crate::phumob::{self, PhuMobParams};
use crate::{Error, Result};

/// Elementary charge (C).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant (J/K).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Bias points per sweep, including 0 V.
pub const N_POINTS: usize = 52;
/// Stored currents per sweep (the 0 V point is dropped).
pub const N_CURRENTS: usize = N_POINTS - 1;
pub const MAX_BIAS: f64 = 4.0;
/// Currents are clamped to this value before any logarithm (A).
pub const CURRENT_FLOOR: f64 = 1e-14;

pub const MAX_ITERATIONS: usize = 200;
pub const RELATIVE_TOLERANCE: f64 = 1e-10;

/// The seven calibration targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    /// K
    pub temperature: f64,
    /// eV
    pub workfunction: f64,
    pub phumob: PhuMobParams,
}

/// Number of regression targets.
pub const N_TARGETS: usize = 7;

/// Target slot order used by every scaled vector in the pipeline.
pub const TARGET_NAMES: [&str; N_TARGETS] = [
    "temperature_K",
    "workfunction_eV",
    "mu_max",
    "mu_min",
    "log10_n_ref",
    "alpha",
    "theta",
];

pub const SLOT_MU_MAX: usize = 2;
pub const SLOT_MU_MIN: usize = 3;

impl ParamVector {
    /// Regression-target layout: `(T, WF, mu_max, mu_min, log10 N_ref, alpha, theta)`.
    pub fn to_targets(&self) -> [f64; N_TARGETS] {
        let p = &self.phumob;
        [
            self.temperature,
            self.workfunction,
            p.mu_max,
            p.mu_min,
            p.n_ref.log10(),
            p.alpha,
            p.theta,
        ]
    }

    pub fn from_targets(t: &[f64; N_TARGETS]) -> Self {
        ParamVector {
            temperature: t[0],
            workfunction: t[1],
            phumob: PhuMobParams {
                mu_max: t[2],
                mu_min: t[3],
                n_ref: 10f64.powf(t[4]),
                alpha: t[5],
                theta: t[6],
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.temperature.is_finite() || !self.workfunction.is_finite() {
            return Err(Error::Domain(format!("non-finite parameter vector {self:?}")));
        }
        self.phumob.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceGeometry {
    /// cm
    pub drift_thickness: f64,
    /// cm⁻³
    pub drift_doping: f64,
    /// cm²
    pub anode_area: f64,
    /// eV
    pub electron_affinity: f64,
    /// A·cm⁻²·K⁻²
    pub richardson_constant: f64,
    pub ideality_factor: f64,
    /// Ω
    pub contact_resistance: f64,
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        DeviceGeometry {
            drift_thickness: 10e-4,
            drift_doping: 1e16,
            anode_area: 1e-4,
            electron_affinity: 4.0,
            richardson_constant: 41.0,
            ideality_factor: 1.03,
            contact_resistance: 0.0,
        }
    }
}

impl DeviceGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("drift_thickness", self.drift_thickness),
            ("drift_doping", self.drift_doping),
            ("anode_area", self.anode_area),
            ("electron_affinity", self.electron_affinity),
            ("richardson_constant", self.richardson_constant),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!("geometry {name} = {v} must be positive")));
            }
        }
        if !(self.ideality_factor.is_finite() && self.ideality_factor >= 1.0) {
            return Err(Error::Domain(format!(
                "ideality factor {} must be >= 1",
                self.ideality_factor
            )));
        }
        if !(self.contact_resistance.is_finite() && self.contact_resistance >= 0.0) {
            return Err(Error::Domain(format!(
                "contact resistance {} must be non-negative",
                self.contact_resistance
            )));
        }
        Ok(())
    }
}

/// One forward sweep: 52 biases and the 51 currents at `voltages[1..]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IVCurve {
    pub voltages: Vec<f64>,
    pub currents: Vec<f64>,
}

/// The uniform bias grid `4 i / 51`, `i = 0..=51`.
pub fn bias_grid() -> Vec<f64> {
    (0..N_POINTS)
        .map(|i| MAX_BIAS * i as f64 / (N_POINTS - 1) as f64)
        .collect()
}

impl IVCurve {
    /// Wraps 51 currents on the standard bias grid.
    pub fn from_currents(currents: Vec<f64>) -> Result<Self> {
        if currents.len() != N_CURRENTS {
            return Err(Error::DimensionMismatch {
                context: "curve currents".into(),
                expected: N_CURRENTS,
                got: currents.len(),
            });
        }
        Ok(IVCurve {
            voltages: bias_grid(),
            currents,
        })
    }

    /// Currents floored at [`CURRENT_FLOOR`].
    pub fn floored(&self) -> Vec<f64> {
        self.currents.iter().map(|&i| i.max(CURRENT_FLOOR)).collect()
    }

    /// log₁₀ of the floored currents.
    pub fn log_currents(&self) -> Vec<f64> {
        self.currents
            .iter()
            .map(|&i| i.max(CURRENT_FLOOR).log10())
            .collect()
    }
}

/// Per-device constants of the implicit circuit equation
/// `I = I_s (exp((V - I R_s) / (n V_t)) - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiodeModel {
    /// A
    pub saturation_current: f64,
    /// n·kT/q (V)
    pub emission_voltage: f64,
    /// Ω
    pub series_resistance: f64,
    /// eV
    pub barrier_height: f64,
}

impl DiodeModel {
    pub fn new(params: &ParamVector, geom: &DeviceGeometry) -> Result<Self> {
        geom.validate()?;
        params.validate()?;
        let barrier = params.workfunction - geom.electron_affinity;
        if barrier <= 0.0 {
            return Err(Error::NonPositiveBarrier {
                barrier_ev: barrier,
                workfunction: params.workfunction,
                affinity: geom.electron_affinity,
            });
        }
        let t = params.temperature;
        let thermal_voltage = BOLTZMANN * t / ELEMENTARY_CHARGE;
        let mu = phumob::mobility(&params.phumob, t)?.mu_total;
        let drift = geom.drift_thickness
            / (ELEMENTARY_CHARGE * mu * geom.drift_doping * geom.anode_area);
        Ok(DiodeModel {
            saturation_current: geom.anode_area
                * geom.richardson_constant
                * t
                * t
                * (-barrier / thermal_voltage).exp(),
            emission_voltage: geom.ideality_factor * thermal_voltage,
            series_resistance: drift + geom.contact_resistance,
            barrier_height: barrier,
        })
    }

    /// Current with the junction seeing the full bias (no series drop).
    pub fn ideal_current(&self, junction_voltage: f64) -> f64 {
        self.saturation_current * (junction_voltage / self.emission_voltage).exp_m1()
    }

    /// `f(I) = I_s (exp((V - I R_s)/(n V_t)) - 1) - I`; strictly decreasing in `I`.
    pub fn residual(&self, voltage: f64, current: f64) -> f64 {
        self.ideal_current(voltage - current * self.series_resistance) - current
    }

    /// Root bracket `[0, min(I_ideal(V), V/R_s)]` for `voltage >= 0`.
    pub fn bracket(&self, voltage: f64) -> (f64, f64) {
        let ideal = self.ideal_current(voltage);
        let upper = if self.series_resistance > 0.0 {
            ideal.min(voltage / self.series_resistance)
        } else {
            ideal
        };
        (0.0, upper)
    }

    /// Solves the circuit equation at one bias.
    ///
    /// Newton runs on the junction voltage `Vj = V - I R_s`, where the
    /// residual `h(Vj) = Vj - V + R_s I_ideal(Vj)` is increasing and convex.
    /// Starting to the right of the root makes the iterates monotone; any
    /// step that leaves the shrinking bracket falls back to bisection.
    pub fn solve(&self, voltage: f64) -> Result<f64> {
        if !(voltage.is_finite() && voltage >= 0.0) {
            return Err(Error::Domain(format!("bias {voltage} V must be >= 0")));
        }
        if voltage == 0.0 {
            return Ok(0.0);
        }
        let r = self.series_resistance;
        if r == 0.0 {
            return Ok(self.ideal_current(voltage));
        }
        let nvt = self.emission_voltage;
        let is = self.saturation_current;
        let h = |vj: f64| vj - voltage + r * self.ideal_current(vj);

        let (mut lo, mut hi) = (0.0, voltage);
        // Vj where the series drop alone would equal V: h(start) >= 0.
        let mut vj = (nvt * (voltage / (r * is)).ln_1p()).min(voltage);
        if !vj.is_finite() {
            vj = voltage;
        }
        for _ in 0..MAX_ITERATIONS {
            let hv = h(vj);
            if hv > 0.0 {
                hi = vj;
            } else if hv < 0.0 {
                lo = vj;
            } else {
                return Ok(self.ideal_current(vj));
            }
            let slope = 1.0 + r * is * (vj / nvt).exp() / nvt;
            let mut next = vj - hv / slope;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let current = self.ideal_current(vj);
            let next_current = self.ideal_current(next);
            if (next_current - current).abs() <= 0.01 * RELATIVE_TOLERANCE * next_current.abs()
                || next == vj
            {
                return Ok(next_current);
            }
            vj = next;
        }
        Err(Error::NonConvergence {
            voltage,
            iterations: MAX_ITERATIONS,
        })
    }
}

/// Current at one bias for the given parameters and device.
pub fn solve_implicit(voltage: f64, params: &ParamVector, geom: &DeviceGeometry) -> Result<f64> {
    DiodeModel::new(params, geom)?.solve(voltage)
}

/// Full 52-point forward sweep.
pub fn simulate(params: &ParamVector, geom: &DeviceGeometry) -> Result<IVCurve> {
    let model = DiodeModel::new(params, geom)?;
    let voltages = bias_grid();
    let currents = voltages[1..]
        .iter()
        .map(|&v| model.solve(v))
        .collect::<Result<Vec<_>>>()?;
    Ok(IVCurve { voltages, currents })
}
