//! Independent oracles for the integration and acceptance suites.
//!
//! Nothing here calls into the simulator's amplitude kernels: gates are built
//! as full `2^n × 2^n` matrices (rotations via a Taylor-series matrix
//! exponential) and multiplied, and linear systems are solved in double-double
//! arithmetic by Gaussian elimination.

#![allow(dead_code)]

use dqrc::simulator::{Circuit, Gate};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type CMat = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn pauli_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// `exp(m)` by a 60-term Taylor series.
pub fn expm(m: &CMat) -> CMat {
    let n = m.nrows();
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..60 {
        term = &term * m / c(k as f64, 0.0);
        result += &term;
    }
    result
}

/// 2×2 matrix of a single-qubit gate built from first principles.
pub fn gate_2x2(g: &Gate) -> CMat {
    match *g {
        Gate::Rx { theta, .. } => expm(&(pauli_x() * c(0.0, -theta / 2.0))),
        Gate::Rz { theta, .. } => expm(&(pauli_z() * c(0.0, -theta / 2.0))),
        Gate::H { .. } => {
            let r = 1.0 / 2f64.sqrt();
            CMat::from_row_slice(2, 2, &[c(r, 0.), c(r, 0.), c(r, 0.), c(-r, 0.)])
        }
        Gate::Phase { theta, .. } => {
            CMat::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), Complex64::from_polar(1.0, theta)])
        }
        Gate::Cnot { .. } => panic!("not a single-qubit gate"),
    }
}

/// Full-register unitary of `g`; qubit `q` is bit `q` of the basis index, so
/// the Kronecker order is `q_{n-1} ⊗ … ⊗ q_0`.
pub fn gate_unitary(g: &Gate, n: usize) -> CMat {
    let dim = 1usize << n;
    match *g {
        Gate::Cnot { control, target } => CMat::from_fn(dim, dim, |r, col| {
            let image = if col >> control & 1 == 1 { col ^ (1 << target) } else { col };
            if r == image {
                c(1., 0.)
            } else {
                c(0., 0.)
            }
        }),
        _ => {
            let (q, _) = g.qubits();
            let small = gate_2x2(g);
            let mut u = CMat::identity(1, 1);
            for k in (0..n).rev() {
                let factor = if k == q { small.clone() } else { CMat::identity(2, 2) };
                u = u.kronecker(&factor);
            }
            u
        }
    }
}

pub fn circuit_unitary(circ: &Circuit) -> CMat {
    let n = circ.num_qubits();
    let mut u = CMat::identity(1 << n, 1 << n);
    for g in circ.gates() {
        u = gate_unitary(g, n) * u;
    }
    u
}

pub fn oracle_state(circ: &Circuit) -> DVector<Complex64> {
    circuit_unitary(circ).column(0).into_owned()
}

pub fn oracle_expectation_z(state: &DVector<Complex64>, qubit: usize) -> f64 {
    state.iter().enumerate().map(|(b, a)| if b >> qubit & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() }).sum()
}

pub fn oracle_overlap_sq(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm_sqr()
}

pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, gates: usize) -> Circuit {
    let mut circ = Circuit::new(n).unwrap();
    for _ in 0..gates {
        let q = rng.random_range(0..n);
        let theta = rng.random_range(-2.0 * std::f64::consts::PI..2.0 * std::f64::consts::PI);
        let kind = if n == 1 { rng.random_range(0..4) } else { rng.random_range(0..5) };
        let g = match kind {
            0 => Gate::rx(q, theta),
            1 => Gate::rz(q, theta),
            2 => Gate::h(q),
            3 => Gate::phase(q, theta),
            _ => {
                let mut t = rng.random_range(0..n);
                while t == q {
                    t = rng.random_range(0..n);
                }
                Gate::cnot(q, t)
            }
        };
        circ.push(g).unwrap();
    }
    circ
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Expectation of Z on `observable` for a neuron: RX angle encoding followed
/// by `weights.len()` blocks of RX(w_j) and ZZ-type entanglers, composed as
/// dense matrices.
pub fn oracle_neuron(weights: &[Vec<f64>], angles: &[f64], observable: usize) -> f64 {
    let n = angles.len();
    let mut u = CMat::identity(1 << n, 1 << n);
    let mut push = |g: Gate| u = gate_unitary(&g, n) * &u;
    for (q, a) in angles.iter().enumerate() {
        push(Gate::rx(q, *a));
    }
    for row in weights {
        for (q, w) in row.iter().enumerate() {
            push(Gate::rx(q, *w));
        }
        for i in 1..n {
            push(Gate::cnot(i - 1, i));
            push(Gate::rz(i, row[i] - row[i - 1]));
            push(Gate::cnot(i - 1, i));
        }
    }
    oracle_expectation_z(&u.column(0).into_owned(), observable)
}

/// Unnormalised double-double number (hi + lo) for extended-precision solves.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    fn two_sum(a: f64, b: f64) -> (f64, f64) {
        let s = a + b;
        let bb = s - a;
        (s, (a - (s - bb)) + (b - bb))
    }

    fn renorm(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Dd { hi: s, lo: lo - (s - hi) }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = Self::two_sum(self.hi, o.hi);
        Self::renorm(s, e + self.lo + o.lo)
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        Self::renorm(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::new(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::new(q2)));
        let q3 = r.hi / o.hi;
        Dd::new(q1).add(Dd::new(q2)).add(Dd::new(q3))
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Solves `a x = b` in double-double with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn dd_solve(mut a: Vec<Vec<Dd>>, mut b: Vec<Dd>) -> Vec<Dd> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].hi.abs().partial_cmp(&a[j][col].hi.abs()).unwrap()).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col].div(a[col][col]);
            for k in col..n {
                a[row][k] = a[row][k].sub(f.mul(a[col][k]));
            }
            b[row] = b[row].sub(f.mul(b[col]));
        }
    }
    let mut x = vec![Dd::default(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc = acc.sub(a[row][k].mul(x[k]));
        }
        x[row] = acc.div(a[row][row]);
    }
    x
}

/// Ridge weights `W = Y Rᵀ (R Rᵀ + λI)⁻¹` via the normal equations in
/// double-double. `features` is `d × m` with samples as columns.
pub fn dd_ridge(features: &DMatrix<f64>, targets: &[f64], lambda: f64) -> Vec<f64> {
    let (d, m) = features.shape();
    let mut a = vec![vec![Dd::default(); d]; d];
    let mut rhs = vec![Dd::default(); d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = Dd::default();
            for s in 0..m {
                acc = acc.add(Dd::new(features[(i, s)]).mul(Dd::new(features[(j, s)])));
            }
            if i == j {
                acc = acc.add(Dd::new(lambda));
            }
            a[i][j] = acc;
        }
        let mut acc = Dd::default();
        for s in 0..m {
            acc = acc.add(Dd::new(features[(i, s)]).mul(Dd::new(targets[s])));
        }
        rhs[i] = acc;
    }
    dd_solve(a, rhs).into_iter().map(Dd::to_f64).collect()
}
