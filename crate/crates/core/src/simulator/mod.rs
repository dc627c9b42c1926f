//! Exact simulation: statevectors for ideal runs, dense density matrices for
//! noisy runs, expectation values, overlaps and compute–uncompute fidelities.

mod circuit;
mod density;
mod kernels;
mod noise;
mod statevector;

use rand_distr::{Binomial, Distribution};

pub use circuit::{Circuit, Gate, MAX_QUBITS};
pub use density::{DensityMatrix, MAX_NOISY_QUBITS};
pub use kernels::single_qubit_matrix;
pub use noise::{Calibration, NoiseModel};
pub use statevector::StateVector;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

pub fn apply_gate(mut state: StateVector, gate: &Gate) -> Result<StateVector> {
    state.apply(gate)?;
    Ok(state)
}

/// Runs `circuit` from `|0…0⟩`.
pub fn run_circuit(circuit: &Circuit) -> Result<StateVector> {
    let mut s = StateVector::zero(circuit.num_qubits())?;
    s.apply_circuit(circuit)?;
    Ok(s)
}

pub fn expectation_z(state: &StateVector, qubit: usize) -> Result<f64> {
    state.expectation_z(qubit)
}

pub fn overlap_sq(a: &StateVector, b: &StateVector) -> Result<f64> {
    a.overlap_sq(b)
}

/// Evolves `circuit` as a density matrix with depolarizing noise after every
/// gate: `p1` on the target of single-qubit gates, `p2` on both qubits of a CNOT.
pub fn run_circuit_noisy(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    noise.validate()?;
    let mut rho = DensityMatrix::zero(circuit.num_qubits())?;
    for g in circuit.gates() {
        rho.apply(g)?;
        match g.qubits() {
            (c, Some(t)) => rho.depolarize_2q(c, t, noise.p2)?,
            (q, None) => rho.depolarize_1q(q, noise.p1)?,
        }
    }
    Ok(rho)
}

/// `⟨Z_qubit⟩` read through the readout confusion map. With `shots` the value
/// is the mean of a seeded binomial draw; without, it is the analytic limit.
pub fn noisy_expectation_z(
    rho: &DensityMatrix,
    qubit: usize,
    noise: &NoiseModel,
    shots: Option<u32>,
    seed: u64,
) -> Result<f64> {
    let p0 = noise.confuse(rho.prob_zero(qubit)?);
    Ok(2.0 * estimate_probability(p0, shots, seed)? - 1.0)
}

/// Estimates `|⟨a|b⟩|²` as the all-zeros probability of `b` followed by `a†`.
///
/// Without noise the composed circuit runs as a statevector; with noise it
/// runs as a density matrix and every qubit's readout passes through the
/// confusion map before the all-zeros outcome is taken.
pub fn fidelity_via_uncompute(
    a: &Circuit,
    b: &Circuit,
    noise: Option<&NoiseModel>,
    shots: Option<u32>,
    seed: u64,
) -> Result<f64> {
    let mut composed = b.clone();
    composed.append(&a.inverse())?;
    let p = match noise {
        None => run_circuit(&composed)?.amplitudes()[0].norm_sqr().clamp(0.0, 1.0),
        Some(noise) => {
            let rho = run_circuit_noisy(&composed, noise)?;
            all_zeros_with_readout(&rho, noise.p_readout)
        }
    };
    estimate_probability(p, shots, seed)
}

/// `Σ_b P(b) Π_q P(read 0 | b_q)` under symmetric per-qubit confusion.
fn all_zeros_with_readout(rho: &DensityMatrix, p_readout: f64) -> f64 {
    let n = rho.num_qubits();
    rho.probabilities()
        .iter()
        .enumerate()
        .map(|(b, &p)| {
            let ones = (b as u32).count_ones() as i32;
            p * (1.0 - p_readout).powi(n as i32 - ones) * p_readout.powi(ones)
        })
        .sum::<f64>()
        .clamp(0.0, 1.0)
}

fn estimate_probability(p: f64, shots: Option<u32>, seed: u64) -> Result<f64> {
    match shots {
        None => Ok(p),
        Some(0) => Err(Error::validation("shots must be positive")),
        Some(n) => {
            let dist = Binomial::new(u64::from(n), p.clamp(0.0, 1.0))
                .map_err(|e| Error::validation(format!("binomial({n}, {p}): {e}")))?;
            let k = dist.sample(&mut rng_from_seed(seed));
            Ok(k as f64 / f64::from(n))
        }
    }
}
