//! Classical baseline: fully connected network with two ReLU hidden layers
//! and a single sigmoid output neuron, with exact reverse-mode backprop.
//!
//! Complex inputs (XXZ ground states) are split into real and imaginary
//! halves before the first layer; real inputs pass through unchanged.

use crate::dataset::FeatureVec;
use crate::error::{Error, Result};
use crate::model::{Model, ModelKind};
use crate::rng::Rng64;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dims: [usize; 2],
}

impl MlpConfig {
    pub fn new(input_dim: usize, hidden_dims: [usize; 2]) -> Self {
        MlpConfig {
            input_dim,
            hidden_dims,
        }
    }

    /// Flat layout: [W1 (h1×in), b1, W2 (h2×h1), b2, w3 (1×h2), b3].
    pub fn param_count(&self) -> usize {
        let [h1, h2] = self.hidden_dims;
        h1 * self.input_dim + h1 + h2 * h1 + h2 + h2 + 1
    }
}

/// concat(Re(x), Im(x)): complex feature vector to a doubled real vector.
/// Norm-preserving, since |a|² = Re² + Im².
pub fn complexify_split(features: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * features.len());
    out.extend(features.iter().map(|a| a.re));
    out.extend(features.iter().map(|a| a.im));
    out
}

/// Real input view of a feature vector for the MLP.
pub fn mlp_input(features: &FeatureVec) -> Vec<f64> {
    match features {
        FeatureVec::Complex(v) => complexify_split(v),
        FeatureVec::Real(v) => v.clone(),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MlpModel {
    pub config: MlpConfig,
}

struct Slices {
    w1: std::ops::Range<usize>,
    b1: std::ops::Range<usize>,
    w2: std::ops::Range<usize>,
    b2: std::ops::Range<usize>,
    w3: std::ops::Range<usize>,
    b3: usize,
}

impl MlpModel {
    pub fn new(config: MlpConfig) -> Self {
        MlpModel { config }
    }

    fn slices(&self) -> Slices {
        let d = self.config.input_dim;
        let [h1, h2] = self.config.hidden_dims;
        let w1 = 0..h1 * d;
        let b1 = w1.end..w1.end + h1;
        let w2 = b1.end..b1.end + h2 * h1;
        let b2 = w2.end..w2.end + h2;
        let w3 = b2.end..b2.end + h2;
        Slices {
            b3: w3.end,
            w1,
            b1,
            w2,
            b2,
            w3,
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.config.input_dim {
            return Err(Error::structural(format!(
                "input length {} does not match input_dim {}",
                x.len(),
                self.config.input_dim
            )));
        }
        Ok(())
    }

    /// Forward pass keeping pre-activations for backprop.
    fn forward_cached(&self, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<f64>, f64) {
        let s = self.slices();
        let d = self.config.input_dim;
        let [h1, h2] = self.config.hidden_dims;
        let (w1, b1) = (&params[s.w1], &params[s.b1]);
        let (w2, b2) = (&params[s.w2], &params[s.b2]);
        let (w3, b3) = (&params[s.w3], params[s.b3]);

        let mut z1 = vec![0.0; h1];
        for i in 0..h1 {
            let row = &w1[i * d..(i + 1) * d];
            let mut acc = b1[i];
            for (w, xv) in row.iter().zip(x) {
                acc += w * xv;
            }
            z1[i] = acc;
        }
        let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();

        let mut z2 = vec![0.0; h2];
        for i in 0..h2 {
            let row = &w2[i * h1..(i + 1) * h1];
            let mut acc = b2[i];
            for (w, av) in row.iter().zip(&a1) {
                acc += w * av;
            }
            z2[i] = acc;
        }
        let a2: Vec<f64> = z2.iter().map(|&z| z.max(0.0)).collect();

        let mut logit = b3;
        for (w, av) in w3.iter().zip(&a2) {
            logit += w * av;
        }
        (z1, z2, logit)
    }
}

impl Model for MlpModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Mlp
    }

    fn param_count(&self) -> usize {
        self.config.param_count()
    }

    /// Glorot-uniform weights (±√(6/(fan_in+fan_out))), zero biases.
    fn init_params(&self, seed: u64) -> Vec<f64> {
        let s = self.slices();
        let d = self.config.input_dim;
        let [h1, h2] = self.config.hidden_dims;
        let mut params = vec![0.0; self.param_count()];
        let mut rng = Rng64::derive(seed, 0x6d6c70);
        let fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize,
                        rng: &mut Rng64,
                        params: &mut [f64]| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[range] {
                *p = rng.uniform(-limit, limit);
            }
        };
        fill(s.w1, d, h1, &mut rng, &mut params);
        fill(s.w2, h1, h2, &mut rng, &mut params);
        fill(s.w3, h2, 1, &mut rng, &mut params);
        params
    }

    fn logit(&self, params: &[f64], x: &FeatureVec) -> Result<f64> {
        let x = mlp_input(x);
        self.check_input(&x)?;
        Ok(self.forward_cached(params, &x).2)
    }

    fn logit_and_grad(&self, params: &[f64], x: &FeatureVec, grad: &mut [f64]) -> Result<f64> {
        let x = mlp_input(x);
        self.check_input(&x)?;
        let s = self.slices();
        let d = self.config.input_dim;
        let [h1, h2] = self.config.hidden_dims;
        let (z1, z2, logit) = self.forward_cached(params, &x);
        let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
        let a2: Vec<f64> = z2.iter().map(|&z| z.max(0.0)).collect();

        grad.fill(0.0);

        // output layer: d(logit)/dw3 = a2, d/db3 = 1
        grad[s.b3] = 1.0;
        grad[s.w3.clone()].copy_from_slice(&a2);

        // back through layer 2; ReLU subgradient at 0 is 0
        let w3 = &params[s.w3];
        let delta2: Vec<f64> = (0..h2)
            .map(|i| if z2[i] > 0.0 { w3[i] } else { 0.0 })
            .collect();
        {
            let gw2 = &mut grad[s.w2.clone()];
            for i in 0..h2 {
                if delta2[i] != 0.0 {
                    let row = &mut gw2[i * h1..(i + 1) * h1];
                    for (g, av) in row.iter_mut().zip(&a1) {
                        *g = delta2[i] * av;
                    }
                }
            }
        }
        grad[s.b2.clone()].copy_from_slice(&delta2);

        // back through layer 1
        let w2 = &params[s.w2];
        let mut delta1 = vec![0.0; h1];
        for i in 0..h2 {
            if delta2[i] != 0.0 {
                let row = &w2[i * h1..(i + 1) * h1];
                for (dj, wv) in delta1.iter_mut().zip(row) {
                    *dj += delta2[i] * wv;
                }
            }
        }
        for (dj, &zv) in delta1.iter_mut().zip(&z1) {
            if zv <= 0.0 {
                *dj = 0.0;
            }
        }
        {
            let gw1 = &mut grad[s.w1.clone()];
            for i in 0..h1 {
                if delta1[i] != 0.0 {
                    let row = &mut gw1[i * d..(i + 1) * d];
                    for (g, xv) in row.iter_mut().zip(&x) {
                        *g = delta1[i] * xv;
                    }
                }
            }
        }
        grad[s.b1.clone()].copy_from_slice(&delta1);

        Ok(logit)
    }
}
