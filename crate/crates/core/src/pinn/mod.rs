//! Autoencoder feature extraction and the physics-penalized regression head.
//!
//! The autoencoder (51 → 40 → 24 → 10 → 24 → 40 → 51) is trained first on
//! noise-augmented, standardized log-currents. The head (10 → 4×128 → 7) then
//! regresses MinMax-scaled targets from the latent code, minimizing
//! `lambda * L_phy + L_mse`; `lambda = 0` is the plain AE-NN baseline.

pub mod loss;
pub mod sweep;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use loss::{physics_loss, HeadLoss, HybridLoss, LossBreakdown, MseLoss, PhysicsPenalty};
pub use sweep::{local_minima, sweep_lambda, SweepRow, SweepTable};

use crate::datagen::{add_noise, log_transform_currents, Dataset, NoiseModel, ParameterRanges, ScalerState, Split};
use crate::nn::{adam_step, AdamConfig, AdamState, NetworkModel};
use crate::rng::{self, purpose};
use crate::sbd_sim::{IVCurve, ParamVector, N_CURRENTS, N_TARGETS, SLOT_MU_MAX, SLOT_MU_MIN};
use crate::{Error, Result};

pub const LATENT_DIM: usize = 10;
pub const ENCODER_DIMS: [usize; 4] = [N_CURRENTS, 40, 24, LATENT_DIM];
pub const DECODER_DIMS: [usize; 4] = [LATENT_DIM, 24, 40, N_CURRENTS];
pub const HEAD_DIMS: [usize; 6] = [LATENT_DIM, 128, 128, 128, 128, N_TARGETS];

const STAGE_AUTOENCODER: u64 = 1;
const STAGE_HEAD: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Physics-penalty weight (head only).
    #[serde(default)]
    pub lambda: f64,
    /// Augmentation SNR; `None` disables noise.
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub noise_model: NoiseModel,
    pub seed: u64,
    #[serde(default)]
    pub optimizer: AdamConfig,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 0.02,
            snr_db: Some(35.0),
            noise_model: NoiseModel::default(),
            seed: 0,
            optimizer: AdamConfig::default(),
            max_epochs: 2000,
            batch_size: 64,
            patience: 50,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::Config(format!("lambda = {} must be >= 0", self.lambda)));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return Err(Error::Config("snr_db is NaN".into()));
            }
        }
        if !(self.optimizer.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: NetworkModel,
    pub decoder: NetworkModel,
}

impl Autoencoder {
    pub fn init(seed: u64) -> Result<Self> {
        let mut r = rng::stream(seed, &[purpose::INIT, STAGE_AUTOENCODER]);
        let encoder = NetworkModel::mlp(&ENCODER_DIMS, &mut r)?;
        let decoder = NetworkModel::mlp(&DECODER_DIMS, &mut r)?;
        Self::from_parts(encoder, decoder)
    }

    pub fn from_parts(encoder: NetworkModel, decoder: NetworkModel) -> Result<Self> {
        if encoder.layer_dims().first() != Some(&N_CURRENTS)
            || encoder.output_dim() != LATENT_DIM
            || decoder.input_dim() != LATENT_DIM
            || decoder.output_dim() != N_CURRENTS
        {
            return Err(Error::Domain(format!(
                "autoencoder must map {N_CURRENTS} -> {LATENT_DIM} -> {N_CURRENTS}"
            )));
        }
        Ok(Autoencoder { encoder, decoder })
    }

    pub fn encode(&self, scaled_features: &[f64]) -> Result<Vec<f64>> {
        self.encoder.forward_vec(scaled_features)
    }

    pub fn encode_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.encoder.forward(x)
    }

    pub fn reconstruct_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.decoder.forward(self.encoder.forward(x)?.view())
    }
}

/// Deterministic encoder pass on one scaled feature vector.
pub fn encode(ae: &Autoencoder, scaled_features: &[f64]) -> Result<Vec<f64>> {
    ae.encode(scaled_features)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadModel {
    pub network: NetworkModel,
}

impl HeadModel {
    pub fn init(seed: u64) -> Result<Self> {
        let mut r = rng::stream(seed, &[purpose::INIT, STAGE_HEAD]);
        Self::new(NetworkModel::mlp(&HEAD_DIMS, &mut r)?)
    }

    pub fn new(network: NetworkModel) -> Result<Self> {
        if network.layer_dims() != HEAD_DIMS {
            return Err(Error::Domain(format!(
                "head must have dims {HEAD_DIMS:?}, got {:?}",
                network.layer_dims()
            )));
        }
        Ok(HeadModel { network })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AeEpoch {
    pub epoch: usize,
    pub train: f64,
    pub validation: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadEpoch {
    pub epoch: usize,
    pub train: LossBreakdown,
    pub validation: Option<LossBreakdown>,
}

fn rows_to_array(rows: &[Vec<f64>], cols: usize) -> Array2<f64> {
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), cols), flat).expect("uniform rows")
}

/// Clean scaled features of the given records.
pub fn feature_matrix(dataset: &Dataset, indices: &[usize]) -> Result<Array2<f64>> {
    let rows = indices
        .iter()
        .map(|&i| dataset.scaled_features(&dataset.records[i].curve))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows_to_array(&rows, N_CURRENTS))
}

pub fn target_matrix(dataset: &Dataset, indices: &[usize]) -> Result<Array2<f64>> {
    let rows = indices
        .iter()
        .map(|&i| dataset.scaled_targets(&dataset.records[i].params))
        .collect::<Result<Vec<_>>>()?;
    Ok(rows_to_array(&rows, N_TARGETS))
}

/// Noise-augmented scaled features for one epoch. Each record draws from
/// its own stream keyed by `(stage, epoch, record)`.
fn augmented_features(
    dataset: &Dataset,
    indices: &[usize],
    cfg: &TrainConfig,
    stage: u64,
    epoch: usize,
    clean: &Array2<f64>,
) -> Result<Array2<f64>> {
    let Some(snr) = cfg.snr_db else {
        return Ok(clean.clone());
    };
    let rows = indices
        .iter()
        .map(|&i| {
            let mut r = rng::stream(cfg.seed, &[purpose::NOISE, stage, epoch as u64, i as u64]);
            let noisy = add_noise(&dataset.records[i].curve, snr, cfg.noise_model, &mut r);
            dataset.input_scaler.transform(&log_transform_currents(&noisy))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rows_to_array(&rows, N_CURRENTS))
}

fn batch_order(cfg: &TrainConfig, stage: u64, epoch: usize, n: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(cfg.seed, &[purpose::SHUFFLE, stage, epoch as u64]));
    order
}

fn gather(m: &Array2<f64>, rows: &[usize]) -> Array2<f64> {
    m.select(Axis(0), rows)
}

fn diverged(v: f64) -> bool {
    !v.is_finite()
}

/// Trains the autoencoder to reconstruct clean features from noisy ones.
/// Early stopping restores the epoch with the best validation loss
/// (training loss when the validation split is empty).
pub fn train_autoencoder(dataset: &Dataset, cfg: &TrainConfig) -> Result<(Autoencoder, Vec<AeEpoch>)> {
    cfg.validate()?;
    let train_idx = dataset.indices(Split::Train);
    if train_idx.is_empty() {
        return Err(Error::Domain("training split is empty".into()));
    }
    let val_idx = dataset.indices(Split::Validation);
    let clean_train = feature_matrix(dataset, &train_idx)?;
    let clean_val = feature_matrix(dataset, &val_idx)?;

    let mut ae = Autoencoder::init(cfg.seed)?;
    let mut enc_opt = AdamState::new(&ae.encoder, cfg.optimizer);
    let mut dec_opt = AdamState::new(&ae.decoder, cfg.optimizer);
    let mut best = (f64::INFINITY, ae.clone());
    let mut since_best = 0;
    let mut history = Vec::new();

    for epoch in 0..cfg.max_epochs {
        let noisy = augmented_features(dataset, &train_idx, cfg, STAGE_AUTOENCODER, epoch, &clean_train)?;
        let order = batch_order(cfg, STAGE_AUTOENCODER, epoch, train_idx.len());
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = gather(&noisy, chunk);
            let y = gather(&clean_train, chunk);
            let enc_cache = ae.encoder.forward_train(x.view())?;
            let dec_cache = ae.decoder.forward_train(enc_cache.output.view())?;
            let (loss, dl) = crate::nn::mse(&dec_cache.output, y.view());
            let (dec_grads, dlatent) = ae.decoder.backward_with_input(&dec_cache, dl.view())?;
            let enc_grads = ae.encoder.backward(&enc_cache, dlatent.view())?;
            adam_step(&mut ae.decoder, &mut dec_opt, &dec_grads)?;
            adam_step(&mut ae.encoder, &mut enc_opt, &enc_grads)?;
            weighted += loss * chunk.len() as f64;
        }
        let train = weighted / train_idx.len() as f64;
        let validation = if val_idx.is_empty() {
            None
        } else {
            Some(crate::nn::mse(&ae.reconstruct_batch(clean_val.view())?, clean_val.view()).0)
        };
        let monitored = validation.unwrap_or(train);
        if diverged(train) || diverged(monitored) {
            return Err(Error::Divergence {
                stage: "autoencoder".into(),
                epoch,
            });
        }
        history.push(AeEpoch {
            epoch,
            train,
            validation,
        });
        if monitored < best.0 {
            best = (monitored, ae.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    let model = if history.is_empty() { ae } else { best.1 };
    Ok((model, history))
}

/// Everything the head trainer needs, precomputed once.
struct HeadData {
    train_idx: Vec<usize>,
    clean_train: Array2<f64>,
    train_targets: Array2<f64>,
    val_latent: Option<Array2<f64>>,
    val_targets: Array2<f64>,
}

impl HeadData {
    fn new(ae: &Autoencoder, dataset: &Dataset) -> Result<Self> {
        let train_idx = dataset.indices(Split::Train);
        if train_idx.is_empty() {
            return Err(Error::Domain("training split is empty".into()));
        }
        let val_idx = dataset.indices(Split::Validation);
        let val_latent = if val_idx.is_empty() {
            None
        } else {
            Some(ae.encode_batch(feature_matrix(dataset, &val_idx)?.view())?)
        };
        Ok(HeadData {
            clean_train: feature_matrix(dataset, &train_idx)?,
            train_targets: target_matrix(dataset, &train_idx)?,
            val_targets: target_matrix(dataset, &val_idx)?,
            val_latent,
            train_idx,
        })
    }
}

/// Width used to normalise the physics penalty: the `mu_max` sampling range.
pub fn penalty_width(ranges: &ParameterRanges) -> f64 {
    ranges.mu_max[1] - ranges.mu_max[0]
}

pub fn hybrid_loss(dataset: &Dataset, lambda: f64) -> HybridLoss {
    HybridLoss {
        lambda,
        penalty: PhysicsPenalty::new(&dataset.target_scaler, penalty_width(&dataset.sampling.ranges)),
    }
}

/// Trains the head with `lambda * L_phy + L_mse` (`lambda` from `cfg`).
pub fn train_head(ae: &Autoencoder, dataset: &Dataset, cfg: &TrainConfig) -> Result<(HeadModel, Vec<HeadEpoch>)> {
    train_head_with_loss(ae, dataset, cfg, &hybrid_loss(dataset, cfg.lambda))
}

/// The same training loop with the plain MSE objective; `cfg.lambda` is ignored.
pub fn train_head_mse_only(
    ae: &Autoencoder,
    dataset: &Dataset,
    cfg: &TrainConfig,
) -> Result<(HeadModel, Vec<HeadEpoch>)> {
    train_head_with_loss(ae, dataset, cfg, &MseLoss)
}

pub fn train_head_with_loss(
    ae: &Autoencoder,
    dataset: &Dataset,
    cfg: &TrainConfig,
    loss: &dyn HeadLoss,
) -> Result<(HeadModel, Vec<HeadEpoch>)> {
    cfg.validate()?;
    let data = HeadData::new(ae, dataset)?;
    let mut head = HeadModel::init(cfg.seed)?;
    let mut opt = AdamState::new(&head.network, cfg.optimizer);
    let mut best = (f64::INFINITY, head.clone());
    let mut since_best = 0;
    let mut history = Vec::new();
    let n = data.train_idx.len() as f64;

    for epoch in 0..cfg.max_epochs {
        let noisy = augmented_features(dataset, &data.train_idx, cfg, STAGE_HEAD, epoch, &data.clean_train)?;
        let latent = ae.encode_batch(noisy.view())?;
        let order = batch_order(cfg, STAGE_HEAD, epoch, data.train_idx.len());
        let (mut total, mut mse, mut phy) = (0.0, 0.0, 0.0);
        let mut lambda = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = gather(&latent, chunk);
            let y = gather(&data.train_targets, chunk);
            let cache = head.network.forward_train(x.view())?;
            let (b, dl) = loss.evaluate(&cache.output, y.view());
            let grads = head.network.backward(&cache, dl.view())?;
            adam_step(&mut head.network, &mut opt, &grads)?;
            let w = chunk.len() as f64;
            total += b.total * w;
            mse += b.mse * w;
            phy += b.phy * w;
            lambda = b.lambda;
        }
        let train = LossBreakdown {
            total: total / n,
            mse: mse / n,
            phy: phy / n,
            lambda,
        };
        let validation = match &data.val_latent {
            Some(v) => Some(loss.evaluate(&head.network.forward(v.view())?, data.val_targets.view()).0),
            None => None,
        };
        let monitored = validation.map_or(train.total, |v| v.total);
        if diverged(train.total) || diverged(monitored) {
            return Err(Error::Divergence {
                stage: "head".into(),
                epoch,
            });
        }
        history.push(HeadEpoch {
            epoch,
            train,
            validation,
        });
        if monitored < best.0 {
            best = (monitored, head.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > cfg.patience {
                break;
            }
        }
    }
    let model = if history.is_empty() { head } else { best.1 };
    Ok((model, history))
}

/// Head loss on a split's clean latent codes.
pub fn evaluate_head(
    ae: &Autoencoder,
    head: &HeadModel,
    dataset: &Dataset,
    split: Split,
    loss: &dyn HeadLoss,
) -> Result<Option<LossBreakdown>> {
    let idx = dataset.indices(split);
    if idx.is_empty() {
        return Ok(None);
    }
    let latent = ae.encode_batch(feature_matrix(dataset, &idx)?.view())?;
    let pred = head.network.forward(latent.view())?;
    Ok(Some(loss.evaluate(&pred, target_matrix(dataset, &idx)?.view()).0))
}

/// Physical-unit prediction for one curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub params: ParamVector,
    /// `(T, WF, mu_max, mu_min, log10 N_ref, alpha, theta)` in physical units.
    pub targets: [f64; N_TARGETS],
    /// `mu_min >= mu_max`.
    pub violation: bool,
    /// Inside the generation ranges.
    pub in_range: bool,
}

/// Scalers and ranges that travel with a trained model pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelScalers {
    pub input: ScalerState,
    pub target: ScalerState,
    pub ranges: ParameterRanges,
}

impl ModelScalers {
    pub fn from_dataset(dataset: &Dataset) -> Self {
        ModelScalers {
            input: dataset.input_scaler.clone(),
            target: dataset.target_scaler.clone(),
            ranges: dataset.sampling.ranges,
        }
    }
}

fn to_prediction(row: &[f64], ranges: &ParameterRanges) -> Prediction {
    let mut targets = [0.0; N_TARGETS];
    targets.copy_from_slice(row);
    let params = ParamVector::from_targets(&targets);
    Prediction {
        params,
        targets,
        violation: targets[SLOT_MU_MIN] >= targets[SLOT_MU_MAX],
        in_range: ranges.contains(&params),
    }
}

/// log-transform → standardize → encode → head → inverse MinMax, batched.
pub fn predict_batch(
    ae: &Autoencoder,
    head: &HeadModel,
    curves: &[&IVCurve],
    scalers: &ModelScalers,
) -> Result<Vec<Prediction>> {
    if curves.is_empty() {
        return Ok(Vec::new());
    }
    let rows = curves
        .iter()
        .map(|c| scalers.input.transform(&log_transform_currents(c)))
        .collect::<Result<Vec<_>>>()?;
    let scaled = head
        .network
        .forward(ae.encode_batch(rows_to_array(&rows, N_CURRENTS).view())?.view())?;
    scaled
        .rows()
        .into_iter()
        .map(|r| {
            let physical = scalers.target.inverse_transform(r.as_slice().expect("contiguous row"))?;
            Ok(to_prediction(&physical, &scalers.ranges))
        })
        .collect()
}

pub fn predict_params(
    ae: &Autoencoder,
    head: &HeadModel,
    curve: &IVCurve,
    scalers: &ModelScalers,
) -> Result<Prediction> {
    let features = scalers.input.transform(&log_transform_currents(curve))?;
    let latent = ae.encode(&features)?;
    let scaled = head.network.forward_vec(&latent)?;
    let physical = scalers.target.inverse_transform(&scaled)?;
    Ok(to_prediction(&physical, &scalers.ranges))
}

/// Number of predictions with `mu_min >= mu_max` on a split's clean curves.
pub fn split_violations(ae: &Autoencoder, head: &HeadModel, dataset: &Dataset, split: Split) -> Result<usize> {
    let curves: Vec<&IVCurve> = dataset.split_records(split).map(|r| &r.curve).collect();
    let preds = predict_batch(ae, head, &curves, &ModelScalers::from_dataset(dataset))?;
    Ok(preds.iter().filter(|p| p.violation).count())
}
