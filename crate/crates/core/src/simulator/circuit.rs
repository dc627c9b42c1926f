use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Widest circuit the simulator accepts.
pub const MAX_QUBITS: usize = 12;

/// A single gate. The serde form is the worker wire format:
/// `{"g":"rx","q":0,"theta":1.57}`, `{"g":"h","q":1}`, `{"g":"cx","c":0,"t":1}`.
///
/// Rotations follow `R(θ) = exp(-iθσ/2)`; `Phase(θ) = diag(1, e^{iθ})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "g")]
pub enum Gate {
    #[serde(rename = "rx")]
    Rx {
        #[serde(rename = "q")]
        qubit: usize,
        theta: f64,
    },
    #[serde(rename = "rz")]
    Rz {
        #[serde(rename = "q")]
        qubit: usize,
        theta: f64,
    },
    #[serde(rename = "h")]
    H {
        #[serde(rename = "q")]
        qubit: usize,
    },
    #[serde(rename = "p")]
    Phase {
        #[serde(rename = "q")]
        qubit: usize,
        theta: f64,
    },
    #[serde(rename = "cx")]
    Cnot {
        #[serde(rename = "c")]
        control: usize,
        #[serde(rename = "t")]
        target: usize,
    },
}

impl Gate {
    pub fn rx(qubit: usize, theta: f64) -> Self {
        Gate::Rx { qubit, theta }
    }

    pub fn rz(qubit: usize, theta: f64) -> Self {
        Gate::Rz { qubit, theta }
    }

    pub fn h(qubit: usize) -> Self {
        Gate::H { qubit }
    }

    pub fn phase(qubit: usize, theta: f64) -> Self {
        Gate::Phase { qubit, theta }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Cnot { .. })
    }

    /// Qubits touched by the gate, control first for CNOT.
    pub fn qubits(&self) -> (usize, Option<usize>) {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } | Gate::H { qubit } | Gate::Phase { qubit, .. } => {
                (qubit, None)
            }
            Gate::Cnot { control, target } => (control, Some(target)),
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match *self {
            Gate::Rx { theta, .. } | Gate::Rz { theta, .. } | Gate::Phase { theta, .. } => Some(theta),
            Gate::H { .. } | Gate::Cnot { .. } => None,
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx { qubit, theta } => Gate::Rx { qubit, theta: -theta },
            Gate::Rz { qubit, theta } => Gate::Rz { qubit, theta: -theta },
            Gate::Phase { qubit, theta } => Gate::Phase { qubit, theta: -theta },
            g @ (Gate::H { .. } | Gate::Cnot { .. }) => g,
        }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let (a, b) = self.qubits();
        if a >= num_qubits {
            return Err(Error::structural(format!("{self:?}: qubit {a} out of range for width {num_qubits}")));
        }
        if let Some(b) = b {
            if b >= num_qubits {
                return Err(Error::structural(format!("{self:?}: qubit {b} out of range for width {num_qubits}")));
            }
            if a == b {
                return Err(Error::structural(format!("{self:?}: control equals target")));
            }
        }
        if let Some(theta) = self.theta() {
            if !theta.is_finite() {
                return Err(Error::validation(format!("{self:?}: non-finite angle")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct RawCircuit {
    qubits: usize,
    #[serde(default)]
    gates: Vec<Gate>,
}

/// Ordered gate list on a fixed number of qubits. Gate order is execution order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit")]
pub struct Circuit {
    #[serde(rename = "qubits")]
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl TryFrom<RawCircuit> for Circuit {
    type Error = Error;

    fn try_from(raw: RawCircuit) -> Result<Self> {
        let mut c = Circuit::new(raw.qubits)?;
        c.extend(raw.gates)?;
        Ok(c)
    }
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::Capacity(format!("circuit width {num_qubits} outside 1..={MAX_QUBITS}")));
        }
        Ok(Circuit { num_qubits, gates: Vec::new() })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.num_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Self> {
        for g in gates {
            self.push(g)?;
        }
        Ok(self)
    }

    /// Appends all gates of `other`, which must have the same width.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::structural(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.num_qubits, self.num_qubits
            )));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(self)
    }

    /// The gate-wise inverse: reversed order, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit { num_qubits: self.num_qubits, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
