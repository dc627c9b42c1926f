use num_complex::Complex64;

use super::circuit::{Circuit, Gate, MAX_QUBITS};
use super::kernels;
use crate::error::{Error, Result};

/// Pure state on `num_qubits` qubits; `amplitudes[b]` is the coefficient of
/// basis state `b`, with qubit `q` stored in bit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!("width {num_qubits} outside 1..={MAX_QUBITS}")));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector { num_qubits, amplitudes })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm 1
    /// within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::structural(format!("{len} amplitudes is not a power of two ≥ 2")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!("width {num_qubits} exceeds {MAX_QUBITS}")));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::validation(format!("state is not normalized (|ψ|² = {norm})")));
        }
        Ok(StateVector { num_qubits, amplitudes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        kernels::apply(&mut self.amplitudes, gate, 0, false);
        Ok(())
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.num_qubits() != self.num_qubits {
            return Err(Error::structural(format!(
                "circuit width {} does not match state width {}",
                circuit.num_qubits(),
                self.num_qubits
            )));
        }
        // Gates were validated when pushed into the circuit.
        for g in circuit.gates() {
            kernels::apply(&mut self.amplitudes, g, 0, false);
        }
        Ok(())
    }

    /// Probability of reading 0 on `qubit`.
    pub fn prob_zero(&self, qubit: usize) -> Result<f64> {
        check_qubit(qubit, self.num_qubits)?;
        let mask = 1usize << qubit;
        Ok(self.amplitudes.iter().enumerate().filter(|(i, _)| i & mask == 0).map(|(_, a)| a.norm_sqr()).sum())
    }

    /// `⟨Z_qubit⟩ = Σ_b |a_b|² (±1)`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        check_qubit(qubit, self.num_qubits)?;
        let mask = 1usize << qubit;
        let v: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        Ok(v.clamp(-1.0, 1.0))
    }

    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::structural(format!("width mismatch: {} vs {}", self.num_qubits, other.num_qubits)));
        }
        Ok(inner_unchecked(&self.amplitudes, &other.amplitudes))
    }

    /// `|⟨self|other⟩|²`, clamped to `[0, 1]`.
    pub fn overlap_sq(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().clamp(0.0, 1.0))
    }
}

pub(crate) fn inner_unchecked(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn check_qubit(qubit: usize, num_qubits: usize) -> Result<()> {
    if qubit >= num_qubits {
        Err(Error::structural(format!("qubit {qubit} out of range for width {num_qubits}")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&Gate::h(0)).unwrap();
        let before = s.clone();
        s.apply(&Gate::rx(1, 0.0)).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn rx_pi_flips_with_phase() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&Gate::rx(0, PI)).unwrap();
        assert!(close(s.amplitudes()[0], Complex64::new(0.0, 0.0)));
        assert!(close(s.amplitudes()[1], Complex64::new(0.0, -1.0)));
        assert!((s.expectation_z(0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rx_expectation_is_cosine() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&Gate::rx(0, 0.7)).unwrap();
        assert!((s.expectation_z(0).unwrap() - 0.7f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn phase_and_rz_agree_up_to_global_phase() {
        let theta = 0.83;
        let mut a = StateVector::zero(1).unwrap();
        let mut b = StateVector::zero(1).unwrap();
        for s in [&mut a, &mut b] {
            s.apply(&Gate::h(0)).unwrap();
        }
        a.apply(&Gate::phase(0, theta)).unwrap();
        b.apply(&Gate::rz(0, theta)).unwrap();
        assert!((a.overlap_sq(&b).unwrap() - 1.0).abs() < 1e-12);
        let g = Complex64::from_polar(1.0, theta / 2.0);
        assert!(close(a.amplitudes()[1], g * b.amplitudes()[1]));
    }

    #[test]
    fn bell_state() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&Gate::h(0)).unwrap();
        s.apply(&Gate::cnot(0, 1)).unwrap();
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let z = Complex64::new(0.0, 0.0);
        for (got, want) in s.amplitudes().iter().zip([r, z, z, r]) {
            assert!(close(*got, want));
        }
        assert!(s.expectation_z(0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn expectation_of_flipped_qubit() {
        let mut s = StateVector::zero(4).unwrap();
        assert_eq!(s.expectation_z(0).unwrap(), 1.0);
        s.apply(&Gate::rx(0, PI)).unwrap();
        assert!((s.expectation_z(0).unwrap() + 1.0).abs() < 1e-15);
        assert!((s.expectation_z(1).unwrap() - 1.0).abs() < 1e-15);
        assert!(s.expectation_z(4).is_err());
    }

    #[test]
    fn overlaps() {
        let zero = StateVector::zero(1).unwrap();
        let mut one = StateVector::zero(1).unwrap();
        one.apply(&Gate::rx(0, PI)).unwrap();
        assert_eq!(zero.overlap_sq(&zero).unwrap(), 1.0);
        assert!(zero.overlap_sq(&one).unwrap() < 1e-30);
        assert!(zero.overlap_sq(&StateVector::zero(2).unwrap()).is_err());
    }

    #[test]
    fn from_amplitudes_checks_norm() {
        let c = |r| Complex64::new(r, 0.0);
        assert!(StateVector::from_amplitudes(vec![c(1.0), c(1.0)]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(1.0), c(0.0), c(0.0)]).is_err());
        assert!(StateVector::from_amplitudes(vec![c(0.6), c(0.8)]).is_ok());
    }
}
