//! Dense MLP engine: batched forward pass, reverse-mode gradients, Adam and
//! JSON checkpoints. Rows of every batch matrix are samples.

pub mod adam;
pub mod checkpoint;

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamState};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => z.mapv(|v| if v > 0.0 { v } else { 0.0 }),
            Activation::Identity => z.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `fan_in × fan_out`
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }
}

static REVISIONS: AtomicU64 = AtomicU64::new(1);

fn next_revision() -> u64 {
    REVISIONS.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug)]
pub struct NetworkModel {
    layers: Vec<DenseLayer>,
    /// Changes whenever parameters change; ties forward caches to a state.
    revision: u64,
}

impl Clone for NetworkModel {
    fn clone(&self) -> Self {
        NetworkModel {
            layers: self.layers.clone(),
            revision: self.revision,
        }
    }
}

impl PartialEq for NetworkModel {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
    }
}

/// Activations recorded by [`NetworkModel::forward_train`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer (`inputs[0]` is the batch itself).
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pub pre_activations: Vec<Array2<f64>>,
    pub output: Array2<f64>,
    revision: u64,
}

/// Parameter gradients, shaped like the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(model: &NetworkModel) -> Self {
        Gradients {
            weights: model.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: model.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    /// Flattened in the same order as [`NetworkModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| w.iter().chain(b.iter()).copied())
            .collect()
    }
}

impl NetworkModel {
    /// He-uniform weights for ReLU layers, Glorot-uniform for identity
    /// layers; zero biases.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        activations: &[Activation],
        rng: &mut R,
    ) -> Result<Self> {
        if dims.len() < 2 || activations.len() != dims.len() - 1 {
            return Err(Error::Domain(format!(
                "{} layer dims need {} activations, got {}",
                dims.len(),
                dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = match activation {
                    Activation::Relu => (6.0 / fan_in as f64).sqrt(),
                    Activation::Identity => (6.0 / (fan_in + fan_out) as f64).sqrt(),
                };
                let weights =
                    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-limit..limit));
                DenseLayer {
                    weights,
                    bias: Array1::zeros(fan_out),
                    activation,
                }
            })
            .collect();
        Self::from_layers(layers)
    }

    /// ReLU hidden layers and an identity output layer.
    pub fn mlp<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let n = dims.len().saturating_sub(1);
        let acts: Vec<Activation> = (0..n)
            .map(|i| if i + 1 == n { Activation::Identity } else { Activation::Relu })
            .collect();
        Self::new(dims, &acts, rng)
    }

    pub fn from_layers(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Domain("network needs at least one layer".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.fan_out() {
                return Err(Error::DimensionMismatch {
                    context: format!("layer {i} bias"),
                    expected: layer.fan_out(),
                    got: layer.bias.len(),
                });
            }
            if i > 0 && layers[i - 1].fan_out() != layer.fan_in() {
                return Err(Error::DimensionMismatch {
                    context: format!("layer {i} fan-in"),
                    expected: layers[i - 1].fan_out(),
                    got: layer.fan_in(),
                });
            }
            if layer.weights.iter().chain(layer.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("layer {i} has non-finite parameters")));
            }
        }
        Ok(NetworkModel {
            layers,
            revision: next_revision(),
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].fan_in())
            .chain(self.layers.iter().map(|l| l.fan_out()))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].fan_out()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                context: "flat parameter vector".into(),
                expected: self.parameter_count(),
                got: flat.len(),
            });
        }
        let mut it = flat.iter();
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = *it.next().expect("length checked");
            }
        }
        self.revision = next_revision();
        Ok(())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input".into(),
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let mut a = x.to_owned();
        for layer in &self.layers {
            let z = a.dot(&layer.weights) + &layer.bias;
            a = layer.activation.apply(&z);
        }
        Ok(a)
    }

    pub fn forward_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = ArrayView2::from_shape((1, x.len()), x).expect("row vector");
        Ok(self.forward(batch)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_train(&self, x: ArrayView2<f64>) -> Result<ForwardCache> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        for layer in &self.layers {
            let z = a.dot(&layer.weights) + &layer.bias;
            let next = layer.activation.apply(&z);
            inputs.push(a);
            pre_activations.push(z);
            a = next;
        }
        Ok(ForwardCache {
            inputs,
            pre_activations,
            output: a,
            revision: self.revision,
        })
    }

    /// Gradients of a scalar loss given `dL/d(output)` for the cached batch.
    /// ReLU uses subgradient 0 at the kink.
    pub fn backward(&self, cache: &ForwardCache, grad_output: ArrayView2<f64>) -> Result<Gradients> {
        Ok(self.backward_with_input(cache, grad_output)?.0)
    }

    /// As [`Self::backward`], also returning `dL/d(input)`.
    pub fn backward_with_input(
        &self,
        cache: &ForwardCache,
        grad_output: ArrayView2<f64>,
    ) -> Result<(Gradients, Array2<f64>)> {
        if cache.revision != self.revision || cache.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache(
                "cache was produced by a different parameter state".into(),
            ));
        }
        if grad_output.dim() != cache.output.dim() {
            return Err(Error::DimensionMismatch {
                context: "output gradient".into(),
                expected: cache.output.len(),
                got: grad_output.len(),
            });
        }
        let mut weights = Vec::with_capacity(self.layers.len());
        let mut biases = Vec::with_capacity(self.layers.len());
        let mut delta = grad_output.to_owned();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            if layer.activation == Activation::Relu {
                delta.zip_mut_with(&cache.pre_activations[i], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
            }
            weights.push(cache.inputs[i].t().dot(&delta));
            biases.push(delta.sum_axis(Axis(0)));
            delta = delta.dot(&layer.weights.t());
        }
        weights.reverse();
        biases.reverse();
        Ok((Gradients { weights, biases }, delta))
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [DenseLayer] {
        self.revision = next_revision();
        &mut self.layers
    }
}

/// Mean squared error over every element, and its gradient.
pub fn mse(pred: &Array2<f64>, target: ArrayView2<f64>) -> (f64, Array2<f64>) {
    let n = pred.len() as f64;
    let diff = pred - &target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    (loss, diff * (2.0 / n))
}
