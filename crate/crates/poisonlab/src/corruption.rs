//! Data-poisoning protocols and the retain/forget partition they induce.
//!
//! Label flipping replaces y with 1−y on a seeded uniform subset; feature
//! randomization replaces the feature vector with a normalized Gaussian
//! draw. Both keep pristine copies of the selected samples so unlearning
//! can be evaluated against the clean ground truth.

use crate::dataset::{FeatureVec, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::Rng64;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    LabelFlip,
    FeatureRandomize,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::LabelFlip => write!(f, "label_flip"),
            Protocol::FeatureRandomize => write!(f, "feature_randomize"),
        }
    }
}

/// A fully resolved poisoning plan: protocol, noise ratio, seed, and the
/// derived positional forget indices (sorted).
#[derive(Debug, Clone)]
pub struct CorruptionPlan {
    pub protocol: Protocol,
    pub alpha: f64,
    pub seed: u64,
    pub forget_indices: Vec<usize>,
}

impl CorruptionPlan {
    pub fn new(protocol: Protocol, alpha: f64, seed: u64, ds: &LabeledDataset) -> Result<Self> {
        let forget_indices = select_forget_indices(ds.len(), alpha, seed)?;
        Ok(CorruptionPlan {
            protocol,
            alpha,
            seed,
            forget_indices,
        })
    }
}

/// Retain/forget split of a training set after corruption. `forget_clean`
/// holds the pre-corruption copies of the forget samples.
#[derive(Debug, Clone)]
pub struct PartitionedData {
    pub retain: LabeledDataset,
    pub forget_polluted: LabeledDataset,
    pub forget_clean: LabeledDataset,
}

impl PartitionedData {
    /// D_train = D_retain ∪ D_forget^polluted, in retain-then-forget order.
    pub fn composite_train(&self) -> LabeledDataset {
        let mut out = self.retain.clone();
        out.features
            .extend(self.forget_polluted.features.iter().cloned());
        out.labels.extend(&self.forget_polluted.labels);
        out.sample_ids.extend(&self.forget_polluted.sample_ids);
        out.corrupted_mask.extend(&self.forget_polluted.corrupted_mask);
        out.meta.extend(&self.forget_polluted.meta);
        out
    }
}

/// round(x) with ties to even, pinning cases like α=0.5 on odd N.
fn round_half_even(x: f64) -> usize {
    let floor = x.floor();
    let frac = x - floor;
    let base = floor as usize;
    if frac > 0.5 {
        base + 1
    } else if frac < 0.5 {
        base
    } else if base % 2 == 0 {
        base
    } else {
        base + 1
    }
}

/// Seeded uniform sample of round(α·N) positions without replacement,
/// returned sorted. Fisher–Yates prefix over 0..N.
pub fn select_forget_indices(n: usize, alpha: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::usage(format!("alpha {alpha} outside [0, 1]")));
    }
    let k = round_half_even(alpha * n as f64).min(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = Rng64::derive(seed, 0x666f72676574);
    // partial Fisher-Yates: after i swaps the prefix is a uniform i-sample
    for i in 0..k {
        let j = i + rng.below(n - i);
        perm.swap(i, j);
    }
    let mut chosen = perm[..k].to_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

fn split(ds: &LabeledDataset, forget: &[usize]) -> (LabeledDataset, LabeledDataset) {
    let forget_set: std::collections::HashSet<usize> = forget.iter().copied().collect();
    let retain_idx: Vec<usize> = (0..ds.len()).filter(|i| !forget_set.contains(i)).collect();
    (ds.subset(&retain_idx), ds.subset(forget))
}

fn gaussian_feature(template: &FeatureVec, rng: &mut Rng64) -> FeatureVec {
    match template {
        FeatureVec::Complex(v) => {
            let mut out: Vec<Complex64> = (0..v.len())
                .map(|_| Complex64::new(rng.normal(), rng.normal()))
                .collect();
            let norm = out.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in out.iter_mut() {
                *a /= norm;
            }
            FeatureVec::Complex(out)
        }
        FeatureVec::Real(v) => {
            let mut out: Vec<f64> = (0..v.len()).map(|_| rng.normal()).collect();
            let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in out.iter_mut() {
                *x /= norm;
            }
            FeatureVec::Real(out)
        }
    }
}

/// Apply the plan's protocol and return the induced partition.
pub fn apply_plan(ds: &LabeledDataset, plan: &CorruptionPlan) -> Result<PartitionedData> {
    match plan.protocol {
        Protocol::LabelFlip => flip_labels(ds, plan),
        Protocol::FeatureRandomize => randomize_features(ds, plan),
    }
}

/// Label flipping: y → 1−y on the forget subset; features untouched.
pub fn flip_labels(ds: &LabeledDataset, plan: &CorruptionPlan) -> Result<PartitionedData> {
    if plan.protocol != Protocol::LabelFlip {
        return Err(Error::usage("flip_labels called with a non-LabelFlip plan"));
    }
    let (retain, forget_clean) = split(ds, &plan.forget_indices);
    let mut forget_polluted = forget_clean.clone();
    for (l, flag) in forget_polluted
        .labels
        .iter_mut()
        .zip(forget_polluted.corrupted_mask.iter_mut())
    {
        *l = 1 - *l;
        *flag = true;
    }
    Ok(PartitionedData {
        retain,
        forget_polluted,
        forget_clean,
    })
}

/// Feature randomization: features of the forget subset replaced with
/// normalized i.i.d. N(0,1) vectors (complex for XXZ, real for MNIST);
/// labels untouched.
pub fn randomize_features(ds: &LabeledDataset, plan: &CorruptionPlan) -> Result<PartitionedData> {
    if plan.protocol != Protocol::FeatureRandomize {
        return Err(Error::usage(
            "randomize_features called with a non-FeatureRandomize plan",
        ));
    }
    let (retain, forget_clean) = split(ds, &plan.forget_indices);
    let mut forget_polluted = forget_clean.clone();
    let mut rng = Rng64::derive(plan.seed, 0x67617573);
    for (f, flag) in forget_polluted
        .features
        .iter_mut()
        .zip(forget_polluted.corrupted_mask.iter_mut())
    {
        *f = gaussian_feature(f, &mut rng);
        *flag = true;
    }
    Ok(PartitionedData {
        retain,
        forget_polluted,
        forget_clean,
    })
}
