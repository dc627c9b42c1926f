//! Fixed random reservoirs of quantum or classical neurons.
//!
//! Every neuron reads exactly four inputs: `k ∈ {0, 1, 2}` outputs of other
//! neurons plus `4 - k` taps into the input window. The reservoir is driven by
//! a fixed number of synchronous passes starting from an all-zero state.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{Executor, ExpectationJob};
use crate::qneuron::{neuron_circuit, NeuronInput, NeuronParams, DEFAULT_BLOCKS, DEFAULT_QUBITS};
use crate::seed::{derive_seed, derived_rng};

pub const NEURON_INPUTS: usize = 4;
pub const MAX_RECURRENT: usize = 2;
pub const DEFAULT_PASSES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    Quantum,
    Classical,
}

impl std::fmt::Display for NeuronKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NeuronKind::Quantum => "quantum",
            NeuronKind::Classical => "classical",
        })
    }
}

/// Which inputs occupy the low qubit indices of a quantum neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputOrder {
    #[default]
    FeaturesFirst,
    SourcesFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronWiring {
    /// Recurrent in-degree.
    pub k: usize,
    /// Indices of the neurons read recurrently (distinct, never self).
    pub sources: Vec<usize>,
    /// Window positions read directly (may repeat).
    pub feature_taps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NeuronWeights {
    Quantum(NeuronParams),
    Classical { weights: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    pub num_neurons: usize,
    pub window_size: usize,
    pub kind: NeuronKind,
    pub wiring: Vec<NeuronWiring>,
    pub neurons: Vec<NeuronWeights>,
    pub passes: usize,
    #[serde(default)]
    pub input_order: InputOrder,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservoirState {
    pub values: Vec<f64>,
}

impl ReservoirState {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Draws a reservoir from `seed`.
///
/// Wiring and weights come from separate per-neuron streams, so a quantum and
/// a classical reservoir generated with the same seed share their wiring.
/// `k` is capped at `num_neurons - 1` (a single neuron never reads itself).
pub fn generate_reservoir(
    num_neurons: usize,
    window_size: usize,
    kind: NeuronKind,
    seed: u64,
) -> Result<ReservoirSpec> {
    if num_neurons == 0 {
        return Err(Error::validation("reservoir needs at least one neuron"));
    }
    if window_size == 0 {
        return Err(Error::validation("window size must be positive"));
    }
    let mut wiring = Vec::with_capacity(num_neurons);
    let mut neurons = Vec::with_capacity(num_neurons);
    for i in 0..num_neurons {
        let mut rng = derived_rng(seed, "wiring", &[i as u64]);
        let k = rng.random_range(0..=MAX_RECURRENT).min(num_neurons - 1);
        let sources =
            sample(&mut rng, num_neurons - 1, k).into_iter().map(|s| if s >= i { s + 1 } else { s }).collect();
        let feature_taps = (0..NEURON_INPUTS - k).map(|_| rng.random_range(0..window_size)).collect();
        wiring.push(NeuronWiring { k, sources, feature_taps });

        let mut wrng = derived_rng(seed, "weights", &[i as u64]);
        neurons.push(match kind {
            NeuronKind::Quantum => {
                NeuronWeights::Quantum(NeuronParams::random(&mut wrng, DEFAULT_QUBITS, DEFAULT_BLOCKS))
            }
            NeuronKind::Classical => NeuronWeights::Classical {
                weights: (0..NEURON_INPUTS).map(|_| wrng.random_range(-1.0..=1.0)).collect(),
            },
        });
    }
    let spec = ReservoirSpec {
        num_neurons,
        window_size,
        kind,
        wiring,
        neurons,
        passes: DEFAULT_PASSES,
        input_order: InputOrder::FeaturesFirst,
        seed,
    };
    spec.validate()?;
    Ok(spec)
}

impl ReservoirSpec {
    pub fn validate(&self) -> Result<()> {
        let n = self.num_neurons;
        if self.wiring.len() != n || self.neurons.len() != n {
            return Err(Error::structural(format!("reservoir of {n} neurons has mismatched wiring/weights")));
        }
        if self.passes == 0 {
            return Err(Error::validation("passes must be ≥ 1"));
        }
        for (i, (w, nw)) in self.wiring.iter().zip(&self.neurons).enumerate() {
            if w.sources.len() != w.k || w.k + w.feature_taps.len() != NEURON_INPUTS {
                return Err(Error::structural(format!("neuron {i}: needs exactly {NEURON_INPUTS} inputs")));
            }
            if w.sources.iter().any(|&s| s == i || s >= n) {
                return Err(Error::structural(format!("neuron {i}: invalid recurrent source")));
            }
            let mut sorted = w.sources.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != w.sources.len() {
                return Err(Error::structural(format!("neuron {i}: duplicate recurrent source")));
            }
            if w.feature_taps.iter().any(|&t| t >= self.window_size) {
                return Err(Error::structural(format!("neuron {i}: feature tap outside window")));
            }
            match (self.kind, nw) {
                (NeuronKind::Quantum, NeuronWeights::Quantum(p)) if p.num_qubits == NEURON_INPUTS => p.validate()?,
                (NeuronKind::Classical, NeuronWeights::Classical { weights }) if weights.len() == NEURON_INPUTS => {}
                _ => return Err(Error::structural(format!("neuron {i}: weights do not match reservoir kind"))),
            }
        }
        Ok(())
    }

    /// The four inputs of neuron `i` given the window and the previous pass.
    pub fn neuron_inputs(&self, i: usize, window: &[f64], prev: &[f64]) -> Vec<f64> {
        let w = &self.wiring[i];
        let features = w.feature_taps.iter().map(|&t| window[t]);
        let sources = w.sources.iter().map(|&s| prev[s]);
        match self.input_order {
            InputOrder::FeaturesFirst => features.chain(sources).collect(),
            InputOrder::SourcesFirst => sources.chain(features).collect(),
        }
    }

    /// Number of circuit evaluations one forward performs.
    pub fn dispatches_per_forward(&self) -> u64 {
        match self.kind {
            NeuronKind::Quantum => (self.num_neurons * self.passes) as u64,
            NeuronKind::Classical => 0,
        }
    }
}

/// Seed of the shot stream for `(pass, neuron)` within one forward.
pub fn neuron_shot_seed(sample_seed: u64, pass: usize, neuron: usize) -> u64 {
    derive_seed(sample_seed, "neuron-shots", &[pass as u64, neuron as u64])
}

pub fn reservoir_forward(
    spec: &ReservoirSpec,
    window: &[f64],
    exec: &dyn Executor,
    seed: u64,
) -> Result<ReservoirState> {
    Ok(reservoir_forward_many(spec, &[window], exec, &[seed])?.remove(0))
}

/// Forwards several windows at once, batching every pass's neuron circuits
/// into a single executor call. `seeds[s]` is the shot seed base of sample `s`.
pub fn reservoir_forward_many(
    spec: &ReservoirSpec,
    windows: &[&[f64]],
    exec: &dyn Executor,
    seeds: &[u64],
) -> Result<Vec<ReservoirState>> {
    if seeds.len() != windows.len() {
        return Err(Error::structural("one seed per window required"));
    }
    for w in windows {
        if w.len() != spec.window_size {
            return Err(Error::structural(format!(
                "window of length {} for a reservoir expecting {}",
                w.len(),
                spec.window_size
            )));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("non-finite window value"));
        }
    }
    let n = spec.num_neurons;
    let mut states: Vec<Vec<f64>> = vec![vec![0.0; n]; windows.len()];
    for pass in 0..spec.passes {
        states = match spec.kind {
            NeuronKind::Classical => windows
                .iter()
                .zip(&states)
                .map(|(w, prev)| {
                    (0..n)
                        .map(|i| {
                            let inputs = spec.neuron_inputs(i, w, prev);
                            let NeuronWeights::Classical { weights } = &spec.neurons[i] else {
                                unreachable!("validated kind")
                            };
                            weights.iter().zip(&inputs).map(|(a, b)| a * b).sum::<f64>().tanh()
                        })
                        .collect()
                })
                .collect(),
            NeuronKind::Quantum => {
                let mut jobs = Vec::with_capacity(windows.len() * n);
                for (s, (w, prev)) in windows.iter().zip(&states).enumerate() {
                    for i in 0..n {
                        let NeuronWeights::Quantum(params) = &spec.neurons[i] else { unreachable!("validated kind") };
                        let input = NeuronInput::new(spec.neuron_inputs(i, w, prev));
                        let circuit = neuron_circuit(params, &input).map_err(|e| neuron_error(i, e))?;
                        jobs.push(ExpectationJob {
                            circuit,
                            qubit: params.observable,
                            seed: neuron_shot_seed(seeds[s], pass, i),
                        });
                    }
                }
                let values = exec.expectation_batch(&jobs).map_err(|e| match e {
                    Error::Service(m) => Error::Service(format!("pass {pass} of reservoir {:#x}: {m}", spec.seed)),
                    other => other,
                })?;
                values.chunks(n).map(<[f64]>::to_vec).collect()
            }
        };
    }
    Ok(states.into_iter().map(|values| ReservoirState { values }).collect())
}

fn neuron_error(i: usize, e: Error) -> Error {
    match e {
        Error::Validation(m) => Error::Validation(format!("neuron {i}: {m}")),
        Error::Structural(m) => Error::Structural(format!("neuron {i}: {m}")),
        other => other,
    }
}

/// Concatenates reservoir outputs in reservoir order.
pub fn concat_states(states: &[ReservoirState]) -> Result<ReservoirState> {
    if states.is_empty() {
        return Err(Error::validation("nothing to concatenate"));
    }
    Ok(ReservoirState { values: states.iter().flat_map(|s| s.values.iter().copied()).collect() })
}
