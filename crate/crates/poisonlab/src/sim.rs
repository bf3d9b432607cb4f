//! Dense statevector simulation of n-qubit circuits.
//!
//! Gate set: RX, RY, RZ single-qubit rotations (e^{-iθP/2} convention) and the
//! RZZ entangler e^{+iθ/2 Z_j Z_k}. Gates are applied in place via
//! stride-indexed pair updates; no unitary matrices are materialized.
//!
//! Qubit index 0 is the least-significant bit of the basis-state integer.
//!
//! Two gradient paths for ⟨Z⟩ readout are provided: reverse-mode adjoint
//! differentiation (production path) and the parameter-shift rule (oracle).

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Complex amplitudes over `n_qubits`, length exactly 2^n.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

/// Gate kinds supported by the ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Rzz,
}

/// A single parameterized gate: kind, target qubit(s), rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOp {
    pub kind: GateKind,
    pub targets: Targets,
    pub angle: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Targets {
    Single(usize),
    Pair(usize, usize),
}

impl GateOp {
    pub fn rx(qubit: usize, angle: f64) -> Self {
        GateOp {
            kind: GateKind::Rx,
            targets: Targets::Single(qubit),
            angle,
        }
    }
    pub fn ry(qubit: usize, angle: f64) -> Self {
        GateOp {
            kind: GateKind::Ry,
            targets: Targets::Single(qubit),
            angle,
        }
    }
    pub fn rz(qubit: usize, angle: f64) -> Self {
        GateOp {
            kind: GateKind::Rz,
            targets: Targets::Single(qubit),
            angle,
        }
    }
    pub fn rzz(a: usize, b: usize, angle: f64) -> Self {
        GateOp {
            kind: GateKind::Rzz,
            targets: Targets::Pair(a, b),
            angle,
        }
    }

    /// Same gate with negated angle (the inverse for this gate set).
    pub fn inverse(&self) -> Self {
        GateOp {
            angle: -self.angle,
            ..*self
        }
    }
}

impl StateVector {
    /// |0...0⟩ on `n_qubits`.
    pub fn zero_state(n_qubits: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        StateVector {
            n_qubits,
            amplitudes,
        }
    }

    /// Build directly from amplitudes; length must be a power of two and the
    /// vector is normalized (amplitude encoding).
    pub fn amplitude_encode(features: &[Complex64]) -> Result<Self> {
        let len = features.len();
        if len == 0 || !len.is_power_of_two() {
            return Err(Error::encoding(format!(
                "amplitude encoding requires a power-of-two length, got {len}"
            )));
        }
        let norm_sq: f64 = features.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(Error::encoding("cannot encode a zero or non-finite vector"));
        }
        let inv = 1.0 / norm_sq.sqrt();
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes: features.iter().map(|a| a * inv).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::structural(format!(
                "qubit index {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Apply one gate in place. RZZ targets must be adjacent on the chain
    /// (|a-b| = 1, or the (n-1, 0) wrap bond).
    pub fn apply_gate(&mut self, gate: &GateOp) -> Result<()> {
        match (gate.kind, gate.targets) {
            (GateKind::Rx, Targets::Single(q)) => {
                self.check_qubit(q)?;
                let (s, c) = (gate.angle / 2.0).sin_cos();
                self.pair_update(q, |a0, a1| {
                    (
                        Complex64::new(
                            c * a0.re + s * a1.im,
                            c * a0.im - s * a1.re,
                        ),
                        Complex64::new(
                            c * a1.re + s * a0.im,
                            c * a1.im - s * a0.re,
                        ),
                    )
                });
            }
            (GateKind::Ry, Targets::Single(q)) => {
                self.check_qubit(q)?;
                let (s, c) = (gate.angle / 2.0).sin_cos();
                self.pair_update(q, |a0, a1| (c * a0 - s * a1, s * a0 + c * a1));
            }
            (GateKind::Rz, Targets::Single(q)) => {
                self.check_qubit(q)?;
                let phase = Complex64::from_polar(1.0, gate.angle / 2.0);
                let conj = phase.conj();
                self.pair_update(q, |a0, a1| (conj * a0, phase * a1));
            }
            (GateKind::Rzz, Targets::Pair(a, b)) => {
                self.check_qubit(a)?;
                self.check_qubit(b)?;
                if a == b {
                    return Err(Error::structural("RZZ targets must be distinct"));
                }
                if !adjacent_on_chain(a, b, self.n_qubits) {
                    return Err(Error::structural(format!(
                        "RZZ pair ({a}, {b}) is not adjacent on the linear chain"
                    )));
                }
                // e^{+iθ/2 Z_a Z_b}: phase e^{iθ/2 · s_a s_b}, s = +1 for bit 0
                let plus = Complex64::from_polar(1.0, gate.angle / 2.0);
                let minus = plus.conj();
                let (ma, mb) = (1usize << a, 1usize << b);
                for (i, amp) in self.amplitudes.iter_mut().enumerate() {
                    let aligned = ((i & ma) == 0) == ((i & mb) == 0);
                    *amp *= if aligned { plus } else { minus };
                }
            }
            (kind, targets) => {
                return Err(Error::structural(format!(
                    "gate {kind:?} applied with incompatible targets {targets:?}"
                )));
            }
        }
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &[GateOp]) -> Result<()> {
        for gate in circuit {
            self.apply_gate(gate)?;
        }
        Ok(())
    }

    #[inline]
    fn pair_update(
        &mut self,
        qubit: usize,
        f: impl Fn(Complex64, Complex64) -> (Complex64, Complex64),
    ) {
        let stride = 1usize << qubit;
        let dim = self.amplitudes.len();
        let amps = &mut self.amplitudes;
        let mut base = 0;
        while base < dim {
            for i0 in base..base + stride {
                let i1 = i0 + stride;
                let (n0, n1) = f(amps[i0], amps[i1]);
                amps[i0] = n0;
                amps[i1] = n1;
            }
            base += 2 * stride;
        }
    }

    /// ⟨Z_qubit⟩ = Σ |a_b|² · (+1 if bit(b, qubit) = 0 else −1).
    pub fn expect_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        let mask = 1usize << qubit;
        let mut z = 0.0;
        for (i, a) in self.amplitudes.iter().enumerate() {
            let p = a.norm_sqr();
            if i & mask == 0 {
                z += p;
            } else {
                z -= p;
            }
        }
        Ok(z)
    }

    /// ⟨bra| P |self⟩ for the generator Pauli of `gate`, including the −ZZ
    /// sign for RZZ (which is e^{-iθ(−ZZ)/2} in the uniform convention).
    fn generator_expectation(&self, bra: &StateVector, gate: &GateOp) -> Complex64 {
        let amps = &self.amplitudes;
        let bra = &bra.amplitudes;
        match (gate.kind, gate.targets) {
            (GateKind::Rx, Targets::Single(q)) => {
                let mask = 1usize << q;
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..amps.len() {
                    acc += bra[i].conj() * amps[i ^ mask];
                }
                acc
            }
            (GateKind::Ry, Targets::Single(q)) => {
                // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
                let mask = 1usize << q;
                let i_unit = Complex64::new(0.0, 1.0);
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..amps.len() {
                    let flipped = i ^ mask;
                    let coeff = if i & mask == 0 { -i_unit } else { i_unit };
                    acc += bra[i].conj() * coeff * amps[flipped];
                }
                acc
            }
            (GateKind::Rz, Targets::Single(q)) => {
                let mask = 1usize << q;
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..amps.len() {
                    let s = if i & mask == 0 { 1.0 } else { -1.0 };
                    acc += bra[i].conj() * s * amps[i];
                }
                acc
            }
            (GateKind::Rzz, Targets::Pair(a, b)) => {
                let (ma, mb) = (1usize << a, 1usize << b);
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..amps.len() {
                    let aligned = ((i & ma) == 0) == ((i & mb) == 0);
                    // generator is −Z⊗Z
                    let s = if aligned { -1.0 } else { 1.0 };
                    acc += bra[i].conj() * s * amps[i];
                }
                acc
            }
            _ => unreachable!("gate validity checked on application"),
        }
    }

    /// Z_qubit applied to a copy of the state.
    fn z_applied(&self, qubit: usize) -> StateVector {
        let mask = 1usize << qubit;
        let mut out = self.clone();
        for (i, a) in out.amplitudes.iter_mut().enumerate() {
            if i & mask != 0 {
                *a = -*a;
            }
        }
        out
    }
}

fn adjacent_on_chain(a: usize, b: usize, n: usize) -> bool {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    hi - lo == 1 || (lo == 0 && hi == n - 1)
}

/// ⟨Z_readout⟩ after running `circuit` on `state0`.
pub fn run_expectation(state0: &StateVector, circuit: &[GateOp], readout: usize) -> Result<f64> {
    let mut state = state0.clone();
    state.apply_circuit(circuit)?;
    state.expect_z(readout)
}

/// Reverse-mode adjoint gradient of ⟨Z_readout⟩ with respect to every gate
/// angle, in circuit order. One forward pass plus one backward sweep.
pub fn adjoint_gradient(
    state0: &StateVector,
    circuit: &[GateOp],
    readout: usize,
) -> Result<Vec<f64>> {
    adjoint_gradient_with_expectation(state0, circuit, readout).map(|(_, g)| g)
}

/// Adjoint gradient plus the expectation value from the same forward pass.
pub fn adjoint_gradient_with_expectation(
    state0: &StateVector,
    circuit: &[GateOp],
    readout: usize,
) -> Result<(f64, Vec<f64>)> {
    let mut psi = state0.clone();
    psi.apply_circuit(circuit)?;
    psi.check_qubit(readout)?;
    let expectation = psi.expect_z(readout)?;
    let mut lambda = psi.z_applied(readout);
    let mut grads = vec![0.0; circuit.len()];
    for (k, gate) in circuit.iter().enumerate().rev() {
        // dE/dθ_k = 2·Re⟨λ_k| (−i/2) P_k |ψ_k⟩ = Im⟨λ_k| P_k |ψ_k⟩
        grads[k] = psi.generator_expectation(&lambda, gate).im;
        let inv = gate.inverse();
        psi.apply_gate(&inv)?;
        lambda.apply_gate(&inv)?;
    }
    Ok((expectation, grads))
}

/// Parameter-shift gradient: (E(θ_k + π/2) − E(θ_k − π/2)) / 2 per gate,
/// via two full forward passes each. Test oracle for `adjoint_gradient`.
pub fn parameter_shift_gradient(
    state0: &StateVector,
    circuit: &[GateOp],
    readout: usize,
) -> Result<Vec<f64>> {
    use std::f64::consts::FRAC_PI_2;
    let mut shifted = circuit.to_vec();
    let mut grads = Vec::with_capacity(circuit.len());
    for k in 0..circuit.len() {
        shifted[k].angle = circuit[k].angle + FRAC_PI_2;
        let plus = run_expectation(state0, &shifted, readout)?;
        shifted[k].angle = circuit[k].angle - FRAC_PI_2;
        let minus = run_expectation(state0, &shifted, readout)?;
        shifted[k].angle = circuit[k].angle;
        grads.push((plus - minus) / 2.0);
    }
    Ok(grads)
}
