//! Quantum classifier: amplitude-encoded input, depth-D ansatz of per-qubit
//! RX-RY-RX rotations plus a chain of RZZ entanglers, Pauli-Z readout on the
//! final qubit, and a scaled sigmoid.
//!
//! Parameter layout per layer: RX row, RY row, RX row, RZZ row; layers
//! concatenated. The ansatz chain is open by default (n−1 entanglers per
//! layer) with a `periodic_entanglers` switch for the ring variant.

use crate::dataset::FeatureVec;
use crate::error::{Error, Result};
use crate::model::{sigmoid, Model, ModelKind};
use crate::rng::Rng64;
use crate::sim::{adjoint_gradient_with_expectation, GateOp, StateVector};

#[derive(Debug, Clone, Copy)]
pub struct QnnConfig {
    pub n_qubits: usize,
    pub depth: usize,
    /// Scale k applied before the sigmoid: p = σ(k·⟨Z⟩).
    pub sigmoid_scale: f64,
    pub readout_qubit: usize,
    pub periodic_entanglers: bool,
}

impl QnnConfig {
    pub fn new(n_qubits: usize, depth: usize) -> Self {
        QnnConfig {
            n_qubits,
            depth,
            sigmoid_scale: 5.0,
            readout_qubit: n_qubits - 1,
            periodic_entanglers: false,
        }
    }

    pub fn entanglers_per_layer(&self) -> usize {
        if self.periodic_entanglers {
            self.n_qubits
        } else {
            self.n_qubits - 1
        }
    }

    pub fn params_per_layer(&self) -> usize {
        3 * self.n_qubits + self.entanglers_per_layer()
    }

    pub fn param_count(&self) -> usize {
        self.depth * self.params_per_layer()
    }

    /// Ansatz circuit for the given flat angle vector.
    pub fn circuit(&self, angles: &[f64]) -> Result<Vec<GateOp>> {
        if angles.len() != self.param_count() {
            return Err(Error::structural(format!(
                "expected {} angles, got {}",
                self.param_count(),
                angles.len()
            )));
        }
        let n = self.n_qubits;
        let mut gates = Vec::with_capacity(angles.len());
        let mut it = angles.iter().copied();
        for _ in 0..self.depth {
            for q in 0..n {
                gates.push(GateOp::rx(q, it.next().unwrap()));
            }
            for q in 0..n {
                gates.push(GateOp::ry(q, it.next().unwrap()));
            }
            for q in 0..n {
                gates.push(GateOp::rx(q, it.next().unwrap()));
            }
            for q in 0..n - 1 {
                gates.push(GateOp::rzz(q, q + 1, it.next().unwrap()));
            }
            if self.periodic_entanglers {
                gates.push(GateOp::rzz(n - 1, 0, it.next().unwrap()));
            }
        }
        Ok(gates)
    }

    fn encode(&self, features: &FeatureVec) -> Result<StateVector> {
        let complex = features.to_complex();
        if complex.len() != 1 << self.n_qubits {
            return Err(Error::structural(format!(
                "feature length {} does not match 2^{} amplitudes",
                complex.len(),
                self.n_qubits
            )));
        }
        StateVector::amplitude_encode(&complex)
    }
}

/// The QNN as a trainable model; angles are the flat parameter vector.
#[derive(Debug, Clone, Copy)]
pub struct QnnModel {
    pub config: QnnConfig,
}

impl QnnModel {
    pub fn new(config: QnnConfig) -> Self {
        QnnModel { config }
    }

    /// ⟨Z_readout⟩ of the circuit output.
    pub fn expectation(&self, angles: &[f64], features: &FeatureVec) -> Result<f64> {
        let mut state = self.config.encode(features)?;
        state.apply_circuit(&self.config.circuit(angles)?)?;
        state.expect_z(self.config.readout_qubit)
    }

    /// p = σ(k·⟨Z⟩).
    pub fn forward(&self, angles: &[f64], features: &FeatureVec) -> Result<f64> {
        Ok(sigmoid(self.logit(angles, features)?))
    }
}

impl Model for QnnModel {
    fn kind(&self) -> ModelKind {
        ModelKind::Qnn
    }

    fn param_count(&self) -> usize {
        self.config.param_count()
    }

    /// Small-angle start near the identity: uniform in [−0.1, 0.1].
    fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = Rng64::derive(seed, 0x716e6e);
        (0..self.param_count())
            .map(|_| rng.uniform(-0.1, 0.1))
            .collect()
    }

    fn logit(&self, params: &[f64], x: &FeatureVec) -> Result<f64> {
        Ok(self.config.sigmoid_scale * self.expectation(params, x)?)
    }

    fn logit_and_grad(&self, params: &[f64], x: &FeatureVec, grad: &mut [f64]) -> Result<f64> {
        let state0 = self.config.encode(x)?;
        let circuit = self.config.circuit(params)?;
        let k = self.config.sigmoid_scale;
        let (z, dz) =
            adjoint_gradient_with_expectation(&state0, &circuit, self.config.readout_qubit)?;
        for (g, d) in grad.iter_mut().zip(&dz) {
            *g = k * d;
        }
        Ok(k * z)
    }
}
