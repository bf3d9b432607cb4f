//! Common interface over the two classifiers plus the shared binary
//! cross-entropy machinery.
//!
//! Both models produce a scalar pre-sigmoid logit; probability is σ(logit).
//! BCE gradients use the identity dL/d(logit) = p − y, so every training and
//! unlearning objective reduces to a per-sample coefficient times the logit
//! gradient.

use crate::dataset::{FeatureVec, LabeledDataset};
use crate::error::{Error, Result};

pub const PROB_CLAMP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Qnn,
    Mlp,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Qnn => write!(f, "qnn"),
            ModelKind::Mlp => write!(f, "mlp"),
        }
    }
}

pub trait Model: Sync {
    fn kind(&self) -> ModelKind;
    fn param_count(&self) -> usize;
    fn init_params(&self, seed: u64) -> Vec<f64>;
    /// Pre-sigmoid logit for one sample.
    fn logit(&self, params: &[f64], x: &FeatureVec) -> Result<f64>;
    /// Writes d(logit)/dθ into `grad` (length `param_count`) and returns the logit.
    fn logit_and_grad(&self, params: &[f64], x: &FeatureVec, grad: &mut [f64]) -> Result<f64>;
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP_EPS, 1.0 - PROB_CLAMP_EPS)
}

/// σ(logit) for one sample; strictly inside (0, 1) for finite logits.
pub fn predict_prob(model: &dyn Model, params: &[f64], x: &FeatureVec) -> Result<f64> {
    Ok(sigmoid(model.logit(params, x)?))
}

fn bce_term(p: f64, y: u8) -> f64 {
    let p = clamp_prob(p);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Mean binary cross-entropy over the dataset.
pub fn bce_loss(model: &dyn Model, params: &[f64], ds: &LabeledDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::usage("BCE loss over an empty batch"));
    }
    let mut total = 0.0;
    for (x, &y) in ds.features.iter().zip(&ds.labels) {
        total += bce_term(predict_prob(model, params, x)?, y);
    }
    Ok(total / ds.len() as f64)
}

/// Mean BCE plus its gradient: (1/B) Σ (p_i − y_i) · d(logit_i)/dθ.
pub fn bce_loss_and_grad(
    model: &dyn Model,
    params: &[f64],
    ds: &LabeledDataset,
) -> Result<(f64, Vec<f64>)> {
    if ds.is_empty() {
        return Err(Error::usage("BCE gradient over an empty batch"));
    }
    let n_params = model.param_count();
    let mut acc = vec![0.0; n_params];
    let mut sample_grad = vec![0.0; n_params];
    let mut total = 0.0;
    let inv_b = 1.0 / ds.len() as f64;
    for (x, &y) in ds.features.iter().zip(&ds.labels) {
        let z = model.logit_and_grad(params, x, &mut sample_grad)?;
        let p = sigmoid(z);
        total += bce_term(p, y);
        let coeff = (p - y as f64) * inv_b;
        for (a, g) in acc.iter_mut().zip(&sample_grad) {
            *a += coeff * g;
        }
    }
    Ok((total * inv_b, acc))
}

/// Per-sample probabilities over a dataset.
pub fn batch_probs(model: &dyn Model, params: &[f64], ds: &LabeledDataset) -> Result<Vec<f64>> {
    ds.features
        .iter()
        .map(|x| predict_prob(model, params, x))
        .collect()
}

/// Accumulates Σ coeff_i · d(logit_i)/dθ into `acc`; returns the logits.
/// The workhorse behind the composite unlearning objectives.
pub fn accumulate_weighted_logit_grads(
    model: &dyn Model,
    params: &[f64],
    ds: &LabeledDataset,
    coeffs: &[f64],
    acc: &mut [f64],
) -> Result<Vec<f64>> {
    debug_assert_eq!(coeffs.len(), ds.len());
    let mut sample_grad = vec![0.0; model.param_count()];
    let mut logits = Vec::with_capacity(ds.len());
    for (i, x) in ds.features.iter().enumerate() {
        let z = model.logit_and_grad(params, x, &mut sample_grad)?;
        logits.push(z);
        let c = coeffs[i];
        if c != 0.0 {
            for (a, g) in acc.iter_mut().zip(&sample_grad) {
                *a += c * g;
            }
        }
    }
    Ok(logits)
}

/// Fraction of samples with (p > 0.5) = y; exact ties predict class 0.
pub fn accuracy(model: &dyn Model, params: &[f64], ds: &LabeledDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::usage("accuracy over an empty dataset"));
    }
    let mut correct = 0usize;
    for (x, &y) in ds.features.iter().zip(&ds.labels) {
        let p = predict_prob(model, params, x)?;
        let predicted = (p > 0.5) as u8;
        if predicted == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / ds.len() as f64)
}
