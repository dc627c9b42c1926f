//! Quantum neuron: RX angle encoding, a fixed hardware-efficient ansatz, and a
//! single `⟨Z⟩` readout.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Executor, ExpectationJob};
use crate::simulator::{Circuit, Gate};

pub const DEFAULT_QUBITS: usize = 4;
pub const DEFAULT_BLOCKS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    pub num_qubits: usize,
    pub num_blocks: usize,
    /// `num_blocks` rows of `num_qubits` angles (radians).
    pub weights: Vec<Vec<f64>>,
    /// Qubit whose `⟨Z⟩` is the neuron output.
    #[serde(default)]
    pub observable: usize,
}

impl NeuronParams {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        let num_blocks = weights.len();
        let num_qubits = weights.first().map_or(0, Vec::len);
        let p = NeuronParams { num_qubits, num_blocks, weights, observable: 0 };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(num_qubits: usize, num_blocks: usize) -> Self {
        NeuronParams { num_qubits, num_blocks, weights: vec![vec![0.0; num_qubits]; num_blocks], observable: 0 }
    }

    /// Weights drawn uniformly from `[0, 2π)`.
    pub fn random<R: Rng>(rng: &mut R, num_qubits: usize, num_blocks: usize) -> Self {
        let weights = (0..num_blocks).map(|_| (0..num_qubits).map(|_| rng.random_range(0.0..TAU)).collect()).collect();
        NeuronParams { num_qubits, num_blocks, weights, observable: 0 }
    }

    pub fn with_observable(mut self, qubit: usize) -> Result<Self> {
        self.observable = qubit;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_blocks == 0 {
            return Err(Error::validation("neuron needs at least one qubit and one block"));
        }
        if self.weights.len() != self.num_blocks || self.weights.iter().any(|r| r.len() != self.num_qubits) {
            return Err(Error::structural(format!("weights must be {} × {}", self.num_blocks, self.num_qubits)));
        }
        if self.weights.iter().flatten().any(|w| !w.is_finite()) {
            return Err(Error::validation("non-finite ansatz weight"));
        }
        if self.observable >= self.num_qubits {
            return Err(Error::structural(format!(
                "observable qubit {} out of range for {} qubits",
                self.observable, self.num_qubits
            )));
        }
        Ok(())
    }
}

/// Angles fed to the feature map, one per qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronInput {
    pub angles: Vec<f64>,
}

impl NeuronInput {
    pub fn new(angles: Vec<f64>) -> Self {
        NeuronInput { angles }
    }
}

/// `RX(angles[q])` on each qubit `q`, in qubit order.
pub fn build_feature_map(num_qubits: usize, input: &NeuronInput) -> Result<Circuit> {
    if input.angles.len() != num_qubits {
        return Err(Error::structural(format!(
            "neuron input has {} angles, expected {num_qubits}",
            input.angles.len()
        )));
    }
    let mut c = Circuit::new(num_qubits)?;
    for (q, &a) in input.angles.iter().enumerate() {
        c.push(Gate::rx(q, a))?;
    }
    Ok(c)
}

/// Per block (weight row `w`): `RX(w_j)` on every qubit, then for each
/// adjacent pair `(i-1, i)` the entangler `CNOT(i-1→i) · RZ_i(w_i - w_{i-1}) · CNOT(i-1→i)`.
pub fn build_ansatz(params: &NeuronParams) -> Result<Circuit> {
    params.validate()?;
    let n = params.num_qubits;
    let mut c = Circuit::new(n)?;
    for w in &params.weights {
        for (q, &wq) in w.iter().enumerate() {
            c.push(Gate::rx(q, wq))?;
        }
        for i in 1..n {
            c.push(Gate::cnot(i - 1, i))?;
            c.push(Gate::rz(i, w[i] - w[i - 1]))?;
            c.push(Gate::cnot(i - 1, i))?;
        }
    }
    Ok(c)
}

/// Feature map followed by the ansatz.
pub fn neuron_circuit(params: &NeuronParams, input: &NeuronInput) -> Result<Circuit> {
    let mut c = build_feature_map(params.num_qubits, input)?;
    c.append(&build_ansatz(params)?)?;
    Ok(c)
}

pub fn neuron_forward(params: &NeuronParams, input: &NeuronInput, exec: &dyn Executor, seed: u64) -> Result<f64> {
    let job = ExpectationJob { circuit: neuron_circuit(params, input)?, qubit: params.observable, seed };
    Ok(exec.expectation_batch(std::slice::from_ref(&job))?[0])
}
