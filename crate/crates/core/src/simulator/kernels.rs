//! In-place amplitude kernels shared by the statevector and density-matrix
//! simulators. Qubit `q` is bit `q` of the basis index (little-endian).

use num_complex::Complex64;

use super::circuit::Gate;

pub(crate) type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub(crate) enum GateOp {
    Dense(Mat2),
    Diag(Complex64, Complex64),
    Cnot,
}

pub(crate) fn gate_op(gate: &Gate) -> GateOp {
    match *gate {
        Gate::Rx { theta, .. } => {
            let (s, c) = (theta / 2.0).sin_cos();
            let mis = Complex64::new(0.0, -s);
            GateOp::Dense([[Complex64::new(c, 0.0), mis], [mis, Complex64::new(c, 0.0)]])
        }
        Gate::Rz { theta, .. } => {
            GateOp::Diag(Complex64::from_polar(1.0, -theta / 2.0), Complex64::from_polar(1.0, theta / 2.0))
        }
        Gate::H { .. } => {
            let r = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            GateOp::Dense([[r, r], [r, -r]])
        }
        Gate::Phase { theta, .. } => GateOp::Diag(ONE, Complex64::from_polar(1.0, theta)),
        Gate::Cnot { .. } => GateOp::Cnot,
    }
}

/// 2x2 unitary of a single-qubit gate (`None` for CNOT).
pub fn single_qubit_matrix(gate: &Gate) -> Option<Mat2> {
    match gate_op(gate) {
        GateOp::Dense(m) => Some(m),
        GateOp::Diag(d0, d1) => Some([[d0, ZERO], [ZERO, d1]]),
        GateOp::Cnot => None,
    }
}

pub(crate) fn apply_dense(amps: &mut [Complex64], bit: usize, m: &Mat2) {
    let stride = 1usize << bit;
    let len = amps.len();
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            let a0 = amps[i];
            let a1 = amps[i + stride];
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
        }
        base += 2 * stride;
    }
}

pub(crate) fn apply_diag(amps: &mut [Complex64], bit: usize, d0: Complex64, d1: Complex64) {
    let mask = 1usize << bit;
    for (i, a) in amps.iter_mut().enumerate() {
        *a *= if i & mask == 0 { d0 } else { d1 };
    }
}

pub(crate) fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) {
    let cmask = 1usize << control;
    let tmask = 1usize << target;
    for i in 0..amps.len() {
        if i & cmask != 0 && i & tmask == 0 {
            amps.swap(i, i | tmask);
        }
    }
}

/// Applies `gate` with its qubits shifted by `offset`; `conjugate` applies the
/// elementwise complex conjugate of the unitary instead.
pub(crate) fn apply(amps: &mut [Complex64], gate: &Gate, offset: usize, conjugate: bool) {
    let (a, b) = gate.qubits();
    match gate_op(gate) {
        GateOp::Dense(mut m) => {
            if conjugate {
                for row in m.iter_mut() {
                    for v in row.iter_mut() {
                        *v = v.conj();
                    }
                }
            }
            apply_dense(amps, a + offset, &m)
        }
        GateOp::Diag(d0, d1) => {
            let (d0, d1) = if conjugate { (d0.conj(), d1.conj()) } else { (d0, d1) };
            apply_diag(amps, a + offset, d0, d1)
        }
        GateOp::Cnot => apply_cnot(amps, a + offset, b.expect("cnot has a target") + offset),
    }
}
