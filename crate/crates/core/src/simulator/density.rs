use nalgebra::DMatrix;
use num_complex::Complex64;

use super::circuit::{Circuit, Gate};
use super::kernels;
use super::statevector::{check_qubit, StateVector};
use crate::error::{Error, Result};

/// Widest register the dense density-matrix simulator accepts (2^20 entries).
pub const MAX_NOISY_QUBITS: usize = 10;

/// Dense density matrix. Entry `(r, c)` lives at flat index `(r << n) | c`, so
/// the register can be driven by the statevector kernels as a `2n`-qubit
/// vector: `U` acts on the row bits, `conj(U)` on the column bits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_width(num_qubits)?;
        let mut entries = vec![Complex64::new(0.0, 0.0); 1 << (2 * num_qubits)];
        entries[0] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { num_qubits, entries })
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let n = state.num_qubits();
        check_width(n)?;
        let amps = state.amplitudes();
        let mut entries = Vec::with_capacity(amps.len() * amps.len());
        for r in amps {
            for c in amps {
                entries.push(r * c.conj());
            }
        }
        Ok(DensityMatrix { num_qubits: n, entries })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row << self.num_qubits) | col]
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        kernels::apply(&mut self.entries, gate, self.num_qubits, false);
        kernels::apply(&mut self.entries, gate, 0, true);
        Ok(())
    }

    /// `ρ → (1-p)ρ + p · I/2 ⊗ Tr_q ρ`.
    pub fn depolarize_1q(&mut self, qubit: usize, p: f64) -> Result<()> {
        check_qubit(qubit, self.num_qubits)?;
        check_probability(p)?;
        if p == 0.0 {
            return Ok(());
        }
        let n = self.num_qubits;
        let col = 1usize << qubit;
        let row = 1usize << (qubit + n);
        let keep = 1.0 - p;
        for base in 0..self.entries.len() {
            if base & (col | row) != 0 {
                continue;
            }
            let (i00, i01, i10, i11) = (base, base | col, base | row, base | row | col);
            let avg = (self.entries[i00] + self.entries[i11]) * 0.5;
            self.entries[i00] = self.entries[i00] * keep + avg * p;
            self.entries[i11] = self.entries[i11] * keep + avg * p;
            self.entries[i01] *= keep;
            self.entries[i10] *= keep;
        }
        Ok(())
    }

    /// `ρ → (1-p)ρ + p · I/4 ⊗ Tr_{a,b} ρ`.
    pub fn depolarize_2q(&mut self, a: usize, b: usize, p: f64) -> Result<()> {
        check_qubit(a, self.num_qubits)?;
        check_qubit(b, self.num_qubits)?;
        if a == b {
            return Err(Error::structural("two-qubit channel on a single qubit"));
        }
        check_probability(p)?;
        if p == 0.0 {
            return Ok(());
        }
        let n = self.num_qubits;
        let col = [1usize << a, 1usize << b];
        let row = [1usize << (a + n), 1usize << (b + n)];
        let all = col[0] | col[1] | row[0] | row[1];
        let sub = |bits: &[usize; 2], s: usize| {
            (if s & 1 != 0 { bits[0] } else { 0 }) | (if s & 2 != 0 { bits[1] } else { 0 })
        };
        let keep = 1.0 - p;
        for base in 0..self.entries.len() {
            if base & all != 0 {
                continue;
            }
            let mut diag = Complex64::new(0.0, 0.0);
            for s in 0..4 {
                diag += self.entries[base | sub(&row, s) | sub(&col, s)];
            }
            let avg = diag * 0.25;
            for s in 0..4 {
                for t in 0..4 {
                    let i = base | sub(&row, s) | sub(&col, t);
                    self.entries[i] *= keep;
                    if s == t {
                        self.entries[i] += avg * p;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Diagonal, i.e. computational-basis outcome probabilities.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    pub fn prob_zero(&self, qubit: usize) -> Result<f64> {
        check_qubit(qubit, self.num_qubits)?;
        let mask = 1usize << qubit;
        Ok(self
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == 0)
            .map(|(_, p)| p)
            .sum::<f64>()
            .clamp(0.0, 1.0))
    }

    /// `tr(ρ Z_qubit)` without readout error.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        Ok((2.0 * self.prob_zero(qubit)? - 1.0).clamp(-1.0, 1.0))
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |r, c| self.get(r, c))
    }

    /// Largest `|ρ - ρ†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                worst = worst.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn run(circuit: &Circuit) -> Result<Self> {
        let mut rho = DensityMatrix::zero(circuit.num_qubits())?;
        for g in circuit.gates() {
            rho.apply(g)?;
        }
        Ok(rho)
    }
}

fn check_width(n: usize) -> Result<()> {
    if n == 0 || n > MAX_NOISY_QUBITS {
        Err(Error::Capacity(format!("density-matrix simulation supports 1..={MAX_NOISY_QUBITS} qubits, got {n}")))
    } else {
        Ok(())
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        Err(Error::validation(format!("probability {p} outside [0, 1)")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_state_round_trip() {
        let mut s = StateVector::zero(2).unwrap();
        s.apply(&Gate::h(0)).unwrap();
        s.apply(&Gate::cnot(0, 1)).unwrap();
        let mut c = Circuit::new(2).unwrap();
        c.extend([Gate::h(0), Gate::cnot(0, 1)]).unwrap();
        let rho = DensityMatrix::run(&c).unwrap();
        let expect = DensityMatrix::from_pure(&s).unwrap();
        for (a, b) in rho.entries.iter().zip(&expect.entries) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn depolarizing_single_qubit_scales_bloch_vector() {
        let theta: f64 = 1.1;
        let p = 0.13;
        let mut rho = DensityMatrix::zero(1).unwrap();
        rho.apply(&Gate::rx(0, theta)).unwrap();
        rho.depolarize_1q(0, p).unwrap();
        assert!((rho.expectation_z(0).unwrap() - (1.0 - p) * theta.cos()).abs() < 1e-14);
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_two_qubit_mixes_pair() {
        let mut rho = DensityMatrix::zero(3).unwrap();
        rho.apply(&Gate::h(0)).unwrap();
        rho.apply(&Gate::cnot(0, 2)).unwrap();
        rho.depolarize_2q(0, 2, 0.2).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-14);
        assert!(rho.hermiticity_error() < 1e-14);
        assert!(rho.min_eigenvalue() > -1e-12);
        // Full mixing at p → 1 would leave qubit 1 untouched.
        assert!((rho.expectation_z(1).unwrap() - 1.0).abs() < 1e-14);
        // Coherence |00⟩⟨11| on the pair shrinks by 1-p.
        assert!((rho.get(0b101, 0).re - 0.4).abs() < 1e-14);
    }

    #[test]
    fn width_limit() {
        assert!(matches!(DensityMatrix::zero(11), Err(Error::Capacity(_))));
    }

    #[test]
    fn probabilities_are_validated() {
        let mut rho = DensityMatrix::zero(1).unwrap();
        assert!(rho.depolarize_1q(0, 1.0).is_err());
        assert!(rho.depolarize_1q(0, -0.1).is_err());
    }
}
