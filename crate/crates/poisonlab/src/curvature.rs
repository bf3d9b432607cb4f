//! Loss-landscape curvature: exact Hessian diagonals via central differences
//! of the analytic gradient, the trace-ratio metric LRR, and the closed-form
//! single-neuron / single-qubit minimal models that serve as oracles.

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::model::{bce_loss_and_grad, sigmoid, Model};
use crate::rng::Rng64;
use serde::{Deserialize, Serialize};

pub const HESSIAN_SUBSET_SIZE: usize = 100;
pub const DEFAULT_STEP: f64 = 1e-3;
/// Relative disagreement between the two-h estimates above which a
/// diagonal entry is flagged (not failed); ReLU kinks land here.
pub const CONSISTENCY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessianReport {
    pub model_kind: String,
    pub alpha: f64,
    pub seed: u64,
    pub hessian_diagonal: Vec<f64>,
    pub trace: f64,
    pub n_samples_used: usize,
    pub step_size: f64,
    /// Diagonal indices where the h vs h/2 estimates disagree by more than
    /// `CONSISTENCY_TOL` relative.
    pub flagged_indices: Vec<usize>,
}

/// Deterministic subset of `k` training samples for Hessian evaluation.
/// Clean/noisy LRR pairs must share this seed so the subsets match.
pub fn hessian_subset(ds: &LabeledDataset, k: usize, seed: u64) -> LabeledDataset {
    let n = ds.len();
    let k = k.min(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = Rng64::derive(seed, 0x68657373);
    for i in 0..k {
        let j = i + rng.below(n - i);
        perm.swap(i, j);
    }
    let mut chosen = perm[..k].to_vec();
    chosen.sort_unstable();
    ds.subset(&chosen)
}

/// Per-parameter second derivative of the mean BCE loss on `subset`:
/// H_kk = (g_k(θ + h·e_k) − g_k(θ − h·e_k)) / (2h) with the analytic g.
pub fn hessian_diagonal(
    model: &dyn Model,
    params: &[f64],
    subset: &LabeledDataset,
    h: f64,
) -> Result<Vec<f64>> {
    if h <= 0.0 {
        return Err(Error::usage("hessian step size must be positive"));
    }
    let mut theta = params.to_vec();
    let mut diag = vec![0.0; params.len()];
    for k in 0..params.len() {
        theta[k] = params[k] + h;
        let (_, gp) = bce_loss_and_grad(model, &theta, subset)?;
        theta[k] = params[k] - h;
        let (_, gm) = bce_loss_and_grad(model, &theta, subset)?;
        theta[k] = params[k];
        let d = (gp[k] - gm[k]) / (2.0 * h);
        if !d.is_finite() {
            return Err(Error::numerical(format!(
                "non-finite Hessian diagonal at parameter index {k}"
            )));
        }
        diag[k] = d;
    }
    Ok(diag)
}

/// Full report with the built-in two-h consistency check.
pub fn hessian_report(
    model: &dyn Model,
    params: &[f64],
    subset: &LabeledDataset,
    h: f64,
    alpha: f64,
    seed: u64,
) -> Result<HessianReport> {
    let diag = hessian_diagonal(model, params, subset, h)?;
    let diag_half = hessian_diagonal(model, params, subset, h / 2.0)?;
    let mut flagged = Vec::new();
    for (k, (&a, &b)) in diag.iter().zip(&diag_half).enumerate() {
        let scale = a.abs().max(b.abs()).max(1e-8);
        if (a - b).abs() / scale > CONSISTENCY_TOL {
            flagged.push(k);
        }
    }
    let trace = diag.iter().sum();
    Ok(HessianReport {
        model_kind: model.kind().to_string(),
        alpha,
        seed,
        hessian_diagonal: diag,
        trace,
        n_samples_used: subset.len(),
        step_size: h,
        flagged_indices: flagged,
    })
}

/// Landscape Roughening Ratio: Tr(H_noisy) / Tr(H_clean).
pub fn lrr(trace_noisy: f64, trace_clean: f64) -> Result<f64> {
    if trace_clean.abs() < 1e-12 {
        return Err(Error::numerical(
            "degenerate landscape: clean Hessian trace is numerically zero",
        ));
    }
    Ok(trace_noisy / trace_clean)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimalKind {
    SingleNeuron,
    SingleQubit,
}

/// One evaluation point of the closed-form minimal models.
#[derive(Debug, Clone, Copy)]
pub struct MinimalModelPoint {
    pub x: f64,
    pub y: u8,
    pub theta: f64,
    pub model: MinimalKind,
}

fn check_kind(point: &MinimalModelPoint, expected: MinimalKind) -> Result<()> {
    if point.model != expected {
        return Err(Error::usage("minimal-model kind mismatch"));
    }
    Ok(())
}

/// BCE loss of the minimal model at the point; the quantity whose θ-second
/// derivative the closed forms describe.
pub fn minimal_loss(point: &MinimalModelPoint) -> f64 {
    let z = match point.model {
        MinimalKind::SingleNeuron => point.theta * point.x,
        MinimalKind::SingleQubit => (std::f64::consts::PI * point.x + point.theta).cos(),
    };
    let p = sigmoid(z);
    if point.y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

/// Single-neuron curvature H = x²·p(1−p), p = σ(θx). Non-negative.
pub fn minimal_mlp_hessian(point: &MinimalModelPoint) -> Result<f64> {
    check_kind(point, MinimalKind::SingleNeuron)?;
    let p = sigmoid(point.theta * point.x);
    Ok(point.x * point.x * p * (1.0 - p))
}

/// Single-qubit curvature H = p(1−p)·sin²(πx+θ) − (p−y)·cos(πx+θ) with
/// p = σ(cos(πx+θ)). Returns (gauss term, error-phase term, difference);
/// the second term lets mislabeled, phase-aligned points go negative.
pub fn minimal_qnn_hessian(point: &MinimalModelPoint) -> Result<(f64, f64, f64)> {
    check_kind(point, MinimalKind::SingleQubit)?;
    let phi = std::f64::consts::PI * point.x + point.theta;
    let p = sigmoid(phi.cos());
    let term_a = p * (1.0 - p) * phi.sin() * phi.sin();
    let term_b = (p - point.y as f64) * phi.cos();
    Ok((term_a, term_b, term_a - term_b))
}
