//! Adam optimizer and the mini-batch training loop shared by both models.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{accuracy, bce_loss_and_grad, Model};
use crate::rng::Rng64;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, learning_rate: f64, seed: u64) -> Self {
        TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed,
            shuffle: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::usage("batch_size must be ≥ 1"));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::usage("learning_rate must be positive and finite"));
        }
        Ok(())
    }
}

/// Adam first/second moment state.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update in place: θ ← θ − lr·m̂/(√v̂ + ε).
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::structural(format!(
            "adam_step shape mismatch: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - config.adam_beta1.powi(t);
    let bc2 = 1.0 - config.adam_beta2.powi(t);
    for i in 0..params.len() {
        state.m[i] = config.adam_beta1 * state.m[i] + (1.0 - config.adam_beta1) * grads[i];
        state.v[i] = config.adam_beta2 * state.v[i] + (1.0 - config.adam_beta2) * grads[i] * grads[i];
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_eps);
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricsLog {
    pub epochs: Vec<EpochRecord>,
}

impl MetricsLog {
    pub fn final_val_accuracy(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.val_accuracy)
    }
}

/// Per-epoch shuffle stream: one child generator per (base seed, epoch).
fn epoch_rng(base_seed: u64, epoch: usize) -> Rng64 {
    Rng64::derive(base_seed, 0x65706f63_0000_0000 ^ epoch as u64)
}

/// Mini-batch Adam training. Metrics are evaluated once per epoch on the
/// full train set and the validation set. A non-finite loss aborts with a
/// diagnostic naming the epoch, batch, and parameter norm.
pub fn train(
    model: &dyn Model,
    mut params: Vec<f64>,
    train_set: &LabeledDataset,
    val_set: &LabeledDataset,
    config: &TrainConfig,
) -> Result<(Vec<f64>, MetricsLog)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::usage("training on an empty dataset"));
    }
    let mut state = AdamState::new(params.len());
    let mut log = MetricsLog::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..config.epochs {
        let start = Instant::now();
        if config.shuffle {
            epoch_rng(config.seed, epoch).shuffle(&mut order);
        }
        // no drop-last: the short final batch is still processed
        for (batch_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = train_set.subset(chunk);
            let (loss, grads) = bce_loss_and_grad(model, &params, &batch)?;
            if !loss.is_finite() {
                let pnorm = params.iter().map(|p| p * p).sum::<f64>().sqrt();
                return Err(Error::numerical(format!(
                    "non-finite loss {loss} at epoch {epoch}, batch {batch_no}, param norm {pnorm:.6e}"
                )));
            }
            adam_step(&mut params, &grads, &mut state, config)?;
        }
        let (train_loss, _) = bce_loss_and_grad(model, &params, train_set)?;
        log.epochs.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy: accuracy(model, &params, train_set)?,
            val_accuracy: accuracy(model, &params, val_set)?,
            wall_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok((params, log))
}
