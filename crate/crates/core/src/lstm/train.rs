use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::data::FrameSet;
use super::eval::{argmax_rows, evaluate};
use super::loss::batch_cross_entropy;
use super::network::{init_params, Dims, ForwardCache, LstmNetwork};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub hidden: usize,
    pub layers: usize,
    /// Stop once validation accuracy reaches this value.
    pub target_accuracy: Option<f64>,
    /// Return the parameters from the epoch with the best validation
    /// accuracy instead of the last epoch.
    pub keep_best: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 400,
            learning_rate: 1e-3,
            epochs: 250,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            hidden: 128,
            layers: 2,
            target_accuracy: None,
            keep_best: false,
        }
    }
}

impl TrainConfig {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::param("batch_size", "must be at least 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::param("learning_rate", "must be positive"));
        }
        if self.hidden == 0 || self.layers == 0 {
            return Err(Error::param("hidden/layers", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

/// Forward/backward pairing that refuses to backpropagate without a cached
/// forward pass.
#[derive(Debug, Default)]
pub struct TrainStep<T> {
    cache: Option<ForwardCache<T>>,
}

impl<T: Real> TrainStep<T> {
    pub fn new() -> Self {
        TrainStep { cache: None }
    }

    pub fn forward(&mut self, net: &LstmNetwork<T>, batch: ndarray::ArrayView3<'_, T>) -> Result<&ndarray::Array2<T>> {
        self.cache = Some(net.forward_batch(batch)?);
        Ok(&self.cache.as_ref().expect("just set").probs)
    }

    /// Consumes the cached forward pass.
    pub fn backward(&mut self, net: &LstmNetwork<T>, labels: &[usize]) -> Result<LstmNetwork<T>> {
        let cache = self.cache.take().ok_or(Error::MissingCache)?;
        net.backward(&cache, labels)
    }
}

/// Mini-batch Adam training with per-epoch shuffling. Deterministic in
/// `config.seed`.
pub fn train<T: Real>(
    data: &FrameSet<T>,
    validation: Option<&FrameSet<T>>,
    config: &TrainConfig,
) -> Result<(LstmNetwork<T>, History)> {
    train_with(data, validation, config, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with<T: Real>(
    data: &FrameSet<T>,
    validation: Option<&FrameSet<T>>,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(LstmNetwork<T>, History)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let present = data.classes_present();
    if present < 2 {
        return Err(Error::SingleClass(present));
    }
    let dims = Dims {
        input: data.features(),
        hidden: config.hidden,
        layers: config.layers,
        classes: data.num_classes,
    };
    let mut net = init_params::<T>(dims, config.seed)?;
    let mut opt = AdamState::for_network(&net);
    let adam = config.adam();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = History::default();
    let mut step = TrainStep::new();
    let mut best: Option<(f64, LstmNetwork<T>)> = None;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for idx in order.chunks(config.batch_size) {
            let batch = data.gather_time_major(idx);
            let labels: Vec<usize> = idx.iter().map(|&i| data.labels[i]).collect();
            let probs = step.forward(&net, batch.view())?;
            loss_sum += batch_cross_entropy(probs.view(), &labels)?.value * idx.len() as f64;
            correct += argmax_rows(probs)
                .iter()
                .zip(&labels)
                .filter(|(p, l)| p == l)
                .count();
            let grads = step.backward(&net, &labels)?;
            adam_step(&mut net, &grads, &mut opt, &adam)?;
        }
        let (val_loss, val_accuracy) = match validation {
            Some(v) if !v.is_empty() => {
                let probs = net.predict(v.view(), 400)?;
                let loss = batch_cross_entropy(probs.view(), &v.labels)?.value;
                let acc = evaluate_probs(&probs, &v.labels);
                (Some(loss), Some(acc))
            }
            _ => (None, None),
        };
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / data.len() as f64,
            train_accuracy: correct as f64 / data.len() as f64,
            val_loss,
            val_accuracy,
        };
        on_epoch(&record);
        history.epochs.push(record);
        if let (true, Some(acc)) = (config.keep_best, val_accuracy) {
            if best.as_ref().map_or(true, |(b, _)| acc > *b) {
                best = Some((acc, net.clone()));
            }
        }
        if let (Some(target), Some(acc)) = (config.target_accuracy, val_accuracy) {
            if acc >= target {
                break;
            }
        }
    }
    match best {
        Some((_, b)) => Ok((b, history)),
        None => Ok((net, history)),
    }
}

fn evaluate_probs<T: Real>(probs: &ndarray::Array2<T>, labels: &[usize]) -> f64 {
    let pred = argmax_rows(probs);
    pred.iter().zip(labels).filter(|(p, l)| p == l).count() as f64 / labels.len() as f64
}

/// Convenience wrapper returning the final evaluation alongside the model.
pub fn train_and_evaluate<T: Real>(
    data: &FrameSet<T>,
    validation: Option<&FrameSet<T>>,
    test: &FrameSet<T>,
    config: &TrainConfig,
) -> Result<(LstmNetwork<T>, History, super::eval::Evaluation)> {
    let (net, history) = train(data, validation, config)?;
    let ev = evaluate(&net, test)?;
    Ok((net, history, ev))
}
