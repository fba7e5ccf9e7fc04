//! Latin hypercube sampling with the mobility-difference constraint.

use rand::seq::SliceRandom;
use rand::Rng;

use super::SamplingConfig;
use crate::phumob::PhuMobParams;
use crate::rng::{self, purpose};
use crate::sbd_sim::ParamVector;

/// Raw LHS dimensions, in unit-cube column order.
pub const LHS_DIMS: usize = 7;
pub const DIM_NAMES: [&str; LHS_DIMS] = [
    "temperature",
    "workfunction",
    "mu_min",
    "delta_mu",
    "log10_n_ref",
    "alpha",
    "theta",
];

/// `n` points in `[0,1)^dims`; in every column, point `i` of the sorted
/// order lies in stratum `[i/n, (i+1)/n)`.
pub fn unit_hypercube<R: Rng + ?Sized>(n: usize, dims: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut samples = vec![vec![0.0; dims]; n];
    let nf = n as f64;
    let mut column: Vec<f64> = Vec::with_capacity(n);
    for d in 0..dims {
        column.clear();
        for k in 0..n {
            let jitter: f64 = rng.random();
            let lower = k as f64 / nf;
            let upper = ((k + 1) as f64 / nf).next_down();
            column.push(((k as f64 + jitter) / nf).clamp(lower, upper));
        }
        column.shuffle(rng);
        for (row, &u) in samples.iter_mut().zip(column.iter()) {
            row[d] = u;
        }
    }
    samples
}

/// Stratum index of a unit-cube coordinate, using the same boundaries
/// `k/n` as the generator.
pub fn stratum(u: f64, n: usize) -> usize {
    let nf = n as f64;
    let mut k = ((u * nf) as usize).min(n - 1);
    while k > 0 && u < k as f64 / nf {
        k -= 1;
    }
    while k + 1 < n && u >= (k + 1) as f64 / nf {
        k += 1;
    }
    k
}

fn lerp(range: [f64; 2], u: f64) -> f64 {
    range[0] + u * (range[1] - range[0])
}

/// Maps one unit-cube row onto a parameter vector.
///
/// `mu_max = min(mu_min + delta_mu, mu_max ceiling)` keeps `mu_max > mu_min`
/// for any draw; `N_ref` is log-uniform.
pub fn map_unit_row(config: &SamplingConfig, u: &[f64]) -> ParamVector {
    let r = &config.ranges;
    let mu_min = lerp(r.mu_min, u[2]);
    let delta = lerp(r.delta_mu, u[3]);
    let log_n = lerp([r.n_ref[0].log10(), r.n_ref[1].log10()], u[4]);
    ParamVector {
        temperature: lerp(r.temperature, u[0]),
        workfunction: lerp(r.workfunction, u[1]),
        phumob: PhuMobParams {
            mu_max: (mu_min + delta).min(r.mu_max[1]),
            mu_min,
            n_ref: 10f64.powf(log_n),
            alpha: lerp(r.alpha, u[5]),
            theta: lerp(r.theta, u[6]),
        },
    }
}

/// Unit-cube draw plus the mapped parameter vectors.
pub struct LhsDraw {
    pub unit: Vec<Vec<f64>>,
    pub params: Vec<ParamVector>,
}

pub fn lhs_draw(config: &SamplingConfig) -> LhsDraw {
    let mut rng = rng::stream(config.seed, &[purpose::LHS]);
    let unit = unit_hypercube(config.n_samples, LHS_DIMS, &mut rng);
    let params = unit.iter().map(|u| map_unit_row(config, u)).collect();
    LhsDraw { unit, params }
}

pub fn lhs_sample(config: &SamplingConfig) -> Vec<ParamVector> {
    lhs_draw(config).params
}
