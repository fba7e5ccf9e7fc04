use ndarray::Zip;
use serde::{Deserialize, Serialize};

use super::{Gradients, NetworkModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first_moment: Gradients,
    pub second_moment: Gradients,
    pub step: u64,
}

impl AdamState {
    pub fn new(model: &NetworkModel, config: AdamConfig) -> Self {
        AdamState {
            config,
            first_moment: Gradients::zeros_like(model),
            second_moment: Gradients::zeros_like(model),
            step: 0,
        }
    }
}

/// Bias-corrected Adam update, in place.
pub fn adam_step(model: &mut NetworkModel, state: &mut AdamState, grads: &Gradients) -> Result<()> {
    let shapes_match = model.layers().len() == grads.weights.len()
        && grads.weights.len() == state.first_moment.weights.len()
        && model.layers().iter().enumerate().all(|(i, l)| {
            l.weights.dim() == grads.weights[i].dim()
                && l.bias.dim() == grads.biases[i].dim()
                && l.weights.dim() == state.first_moment.weights[i].dim()
        });
    if !shapes_match {
        return Err(Error::Domain("Adam: gradient/state shapes do not match the model".into()));
    }
    state.step += 1;
    let AdamConfig {
        learning_rate: lr,
        beta1,
        beta2,
        epsilon,
    } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    let update = |w: &mut f64, m: &mut f64, v: &mut f64, &g: &f64| {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= lr * m_hat / (v_hat.sqrt() + epsilon);
    };
    for (i, layer) in model.layers_mut().iter_mut().enumerate() {
        Zip::from(&mut layer.weights)
            .and(&mut state.first_moment.weights[i])
            .and(&mut state.second_moment.weights[i])
            .and(&grads.weights[i])
            .for_each(update);
        Zip::from(&mut layer.bias)
            .and(&mut state.first_moment.biases[i])
            .and(&mut state.second_moment.biases[i])
            .and(&grads.biases[i])
            .for_each(update);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{mse, Activation, DenseLayer};
    use crate::rng;
    use ndarray::{array, Array1, Array2};
    use rand::Rng;

    fn single(w: f64, b: f64) -> NetworkModel {
        NetworkModel::from_layers(vec![DenseLayer {
            weights: array![[w]],
            bias: array![b],
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    fn grads(gw: f64, gb: f64) -> Gradients {
        Gradients {
            weights: vec![array![[gw]]],
            biases: vec![array![gb]],
        }
    }

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut m = single(0.3, -0.2);
        let mut s = AdamState::new(&m, AdamConfig::default());
        for _ in 0..5 {
            adam_step(&mut m, &mut s, &grads(0.0, 0.0)).unwrap();
        }
        assert_eq!(m.parameters(), vec![0.3, -0.2]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        for g in [1e-6, 0.37, -42.0, 1e5] {
            let mut m = single(1.0, 1.0);
            let cfg = AdamConfig::default();
            let mut s = AdamState::new(&m, cfg);
            adam_step(&mut m, &mut s, &grads(g, -g)).unwrap();
            let p = m.parameters();
            // Bias-corrected moments are g and g², so the step is
            // lr g / (|g| + eps).
            let step = cfg.learning_rate * g / (g.abs() + cfg.epsilon);
            assert!((p[0] - (1.0 - step)).abs() <= 1e-15, "g={g}");
            assert!((p[1] - (1.0 + step)).abs() <= 1e-15, "g={g}");
        }
    }

    #[test]
    fn two_steps_match_scripted_trace() {
        // Scripted: g1 = 0.5, g2 = 0.5 on w0 = 2.0 with lr 0.01.
        let cfg = AdamConfig {
            learning_rate: 0.01,
            ..AdamConfig::default()
        };
        let mut m = single(2.0, 0.0);
        let mut s = AdamState::new(&m, cfg);
        adam_step(&mut m, &mut s, &grads(0.5, 0.0)).unwrap();
        adam_step(&mut m, &mut s, &grads(0.5, 0.0)).unwrap();

        let (b1, b2, eps, lr) = (0.9f64, 0.999f64, 1e-8f64, 0.01f64);
        let mut w = 2.0f64;
        let (mut mm, mut vv) = (0.0f64, 0.0f64);
        for t in 1..=2 {
            mm = b1 * mm + (1.0 - b1) * 0.5;
            vv = b2 * vv + (1.0 - b2) * 0.25;
            let mh = mm / (1.0 - b1.powi(t));
            let vh = vv / (1.0 - b2.powi(t));
            w -= lr * mh / (vh.sqrt() + eps);
        }
        assert!((m.parameters()[0] - w).abs() <= 1e-10);
        assert!((s.first_moment.weights[0][[0, 0]] - mm).abs() <= 1e-10);
        assert!((s.second_moment.weights[0][[0, 0]] - vv).abs() <= 1e-10);
        assert_eq!(s.step, 2);
    }

    #[test]
    fn toy_regression_loss_drops_ninety_percent() {
        let mut r = rng::stream(11, &[]);
        let x = Array2::from_shape_fn((64, 3), |_| r.random_range(-1.0..1.0));
        let true_w = array![[0.5], [-1.2], [2.0]];
        let y = x.dot(&true_w) + 0.3;
        let mut m = NetworkModel::new(&[3, 1], &[Activation::Identity], &mut r).unwrap();
        let mut s = AdamState::new(
            &m,
            AdamConfig {
                learning_rate: 0.02,
                ..AdamConfig::default()
            },
        );
        let initial = mse(&m.forward(x.view()).unwrap(), y.view()).0;
        for _ in 0..200 {
            let cache = m.forward_train(x.view()).unwrap();
            let (_, dl) = mse(&cache.output, y.view());
            let g = m.backward(&cache, dl.view()).unwrap();
            adam_step(&mut m, &mut s, &g).unwrap();
        }
        let fin = mse(&m.forward(x.view()).unwrap(), y.view()).0;
        assert!(fin <= 0.1 * initial, "{initial} -> {fin}");
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut m = single(1.0, 0.0);
        let mut s = AdamState::new(&m, AdamConfig::default());
        let bad = Gradients {
            weights: vec![Array2::zeros((2, 1))],
            biases: vec![Array1::zeros(1)],
        };
        assert!(adam_step(&mut m, &mut s, &bad).is_err());
    }
}
