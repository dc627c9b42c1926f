//! Execution contexts: where neuron and kernel circuits are evaluated.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pool::{chunks, run_indexed};
use crate::seed::derive_seed;
use crate::simulator::{
    fidelity_via_uncompute, noisy_expectation_z, run_circuit, run_circuit_noisy, Circuit, NoiseModel, StateVector,
};

/// Ideal statevector execution, or calibrated noisy density-matrix execution
/// with optional finite-shot sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ExecMode {
    Ideal,
    Noisy {
        noise: NoiseModel,
        #[serde(default)]
        shots: Option<u32>,
    },
}

impl ExecMode {
    pub fn noise(&self) -> Option<&NoiseModel> {
        match self {
            ExecMode::Ideal => None,
            ExecMode::Noisy { noise, .. } => Some(noise),
        }
    }

    pub fn shots(&self) -> Option<u32> {
        match self {
            ExecMode::Ideal => None,
            ExecMode::Noisy { shots, .. } => *shots,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationJob {
    pub circuit: Circuit,
    pub qubit: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelJob {
    pub a: Circuit,
    pub b: Circuit,
    pub seed: u64,
}

/// Seed of kernel entry `(row, col)` within a matrix evaluated under `seed`.
pub fn kernel_entry_seed(seed: u64, row: usize, col: usize) -> u64 {
    derive_seed(seed, "kernel-entry", &[row as u64, col as u64])
}

const KERNEL_BATCH: usize = 256;

pub trait Executor: Send + Sync {
    fn name(&self) -> &str;

    fn mode(&self) -> &ExecMode;

    /// `⟨Z_qubit⟩` of each job's circuit, in job order.
    fn expectation_batch(&self, jobs: &[ExpectationJob]) -> Result<Vec<f64>>;

    /// Kernel value `|⟨Φ_a|Φ_b⟩|²` (ideal) or its compute–uncompute estimate
    /// (noisy) for each job, in job order.
    fn kernel_batch(&self, jobs: &[KernelJob]) -> Result<Vec<f64>>;

    /// Kernel matrix between `rows` and `cols`. With `symmetric` set, `cols`
    /// must equal `rows`; only the upper triangle is evaluated and mirrored.
    fn kernel_matrix(
        &self,
        rows: &[Circuit],
        cols: &[Circuit],
        symmetric: bool,
        seed: u64,
        workers: usize,
    ) -> Result<DMatrix<f64>> {
        let pairs = entry_pairs(rows.len(), cols.len(), symmetric);
        let batches = chunks(pairs.len(), KERNEL_BATCH);
        let values = run_indexed(workers, batches.len(), |b| {
            let jobs: Vec<KernelJob> = pairs[batches[b].clone()]
                .iter()
                .map(|&(i, j)| KernelJob {
                    a: rows[i].clone(),
                    b: cols[j].clone(),
                    seed: kernel_entry_seed(seed, i, j),
                })
                .collect();
            self.kernel_batch(&jobs)
        })?;
        Ok(assemble(rows.len(), cols.len(), symmetric, &pairs, values.into_iter().flatten()))
    }
}

pub(crate) fn entry_pairs(rows: usize, cols: usize, symmetric: bool) -> Vec<(usize, usize)> {
    if symmetric {
        (0..rows).flat_map(|i| (i..rows).map(move |j| (i, j))).collect()
    } else {
        (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).collect()
    }
}

/// Number of kernel evaluations `kernel_matrix` performs.
pub fn kernel_entry_count(rows: usize, cols: usize, symmetric: bool) -> u64 {
    if symmetric {
        (rows * (rows + 1) / 2) as u64
    } else {
        (rows * cols) as u64
    }
}

fn assemble(
    rows: usize,
    cols: usize,
    symmetric: bool,
    pairs: &[(usize, usize)],
    values: impl Iterator<Item = f64>,
) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for (&(i, j), v) in pairs.iter().zip(values) {
        m[(i, j)] = v;
        if symmetric {
            m[(j, i)] = v;
        }
    }
    m
}

/// In-process simulator backend.
#[derive(Debug, Clone)]
pub struct LocalExecutor {
    name: String,
    mode: ExecMode,
}

impl LocalExecutor {
    pub fn new(name: impl Into<String>, mode: ExecMode) -> Self {
        LocalExecutor { name: name.into(), mode }
    }

    pub fn ideal() -> Self {
        LocalExecutor::new("local", ExecMode::Ideal)
    }

    pub fn expectation(&self, job: &ExpectationJob) -> Result<f64> {
        evaluate_expectation(&self.mode, job)
    }

    pub fn kernel(&self, job: &KernelJob) -> Result<f64> {
        evaluate_kernel(&self.mode, job)
    }
}

pub(crate) fn evaluate_expectation(mode: &ExecMode, job: &ExpectationJob) -> Result<f64> {
    match mode {
        ExecMode::Ideal => run_circuit(&job.circuit)?.expectation_z(job.qubit),
        ExecMode::Noisy { noise, shots } => {
            let rho = run_circuit_noisy(&job.circuit, noise)?;
            noisy_expectation_z(&rho, job.qubit, noise, *shots, job.seed)
        }
    }
}

pub(crate) fn evaluate_kernel(mode: &ExecMode, job: &KernelJob) -> Result<f64> {
    match mode {
        ExecMode::Ideal => run_circuit(&job.a)?.overlap_sq(&run_circuit(&job.b)?),
        ExecMode::Noisy { noise, shots } => fidelity_via_uncompute(&job.a, &job.b, Some(noise), *shots, job.seed),
    }
}

impl Executor for LocalExecutor {
    fn name(&self) -> &str {
        &self.name
    }

    fn mode(&self) -> &ExecMode {
        &self.mode
    }

    fn expectation_batch(&self, jobs: &[ExpectationJob]) -> Result<Vec<f64>> {
        jobs.iter().map(|j| self.expectation(j)).collect()
    }

    fn kernel_batch(&self, jobs: &[KernelJob]) -> Result<Vec<f64>> {
        jobs.iter().map(|j| self.kernel(j)).collect()
    }

    /// Ideal mode simulates each feature state once and reuses it for every
    /// entry; values are identical to per-pair evaluation.
    fn kernel_matrix(
        &self,
        rows: &[Circuit],
        cols: &[Circuit],
        symmetric: bool,
        seed: u64,
        workers: usize,
    ) -> Result<DMatrix<f64>> {
        if self.mode != ExecMode::Ideal {
            return default_kernel_matrix(self, rows, cols, symmetric, seed, workers);
        }
        let simulate = |set: &[Circuit]| -> Result<Vec<StateVector>> {
            let parts = chunks(set.len(), 64);
            let out = run_indexed(workers, parts.len(), |p| {
                set[parts[p].clone()].iter().map(run_circuit).collect::<Result<Vec<_>>>()
            })?;
            Ok(out.into_iter().flatten().collect())
        };
        let row_states = simulate(rows)?;
        let col_states = if symmetric { None } else { Some(simulate(cols)?) };
        let col_states = col_states.as_deref().unwrap_or(&row_states);
        let row_values = run_indexed(workers, rows.len(), |i| {
            let start = if symmetric { i } else { 0 };
            col_states[start..].iter().map(|s| row_states[i].overlap_sq(s)).collect::<Result<Vec<f64>>>()
        })?;
        let pairs = entry_pairs(rows.len(), cols.len(), symmetric);
        Ok(assemble(rows.len(), cols.len(), symmetric, &pairs, row_values.into_iter().flatten()))
    }
}

/// The trait's provided `kernel_matrix`, callable from overriding impls.
pub(crate) fn default_kernel_matrix<E: Executor + ?Sized>(
    exec: &E,
    rows: &[Circuit],
    cols: &[Circuit],
    symmetric: bool,
    seed: u64,
    workers: usize,
) -> Result<DMatrix<f64>> {
    struct Plain<'a, E: ?Sized>(&'a E);
    impl<E: Executor + ?Sized> Executor for Plain<'_, E> {
        fn name(&self) -> &str {
            self.0.name()
        }
        fn mode(&self) -> &ExecMode {
            self.0.mode()
        }
        fn expectation_batch(&self, jobs: &[ExpectationJob]) -> Result<Vec<f64>> {
            self.0.expectation_batch(jobs)
        }
        fn kernel_batch(&self, jobs: &[KernelJob]) -> Result<Vec<f64>> {
            self.0.kernel_batch(jobs)
        }
    }
    Plain(exec).kernel_matrix(rows, cols, symmetric, seed, workers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::Gate;

    fn fm(x: f64, y: f64) -> Circuit {
        let mut c = Circuit::new(2).unwrap();
        c.extend([Gate::h(0), Gate::phase(0, x), Gate::h(1), Gate::phase(1, y)]).unwrap();
        c
    }

    #[test]
    fn cached_gram_equals_pairwise_evaluation() {
        let rows: Vec<Circuit> = (0..9).map(|i| fm(0.3 * i as f64, -0.2 * i as f64)).collect();
        let cols: Vec<Circuit> = (0..4).map(|i| fm(0.1 * i as f64, 1.0)).collect();
        let exec = LocalExecutor::ideal();
        for (c, sym) in [(&rows, true), (&cols, false)] {
            let fast = exec.kernel_matrix(&rows, c, sym, 1, 3).unwrap();
            let slow = default_kernel_matrix(&exec, &rows, c, sym, 1, 2).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn noisy_kernel_matrix_is_symmetric_and_seeded() {
        let rows: Vec<Circuit> = (0..4).map(|i| fm(0.4 * i as f64, 0.5)).collect();
        let mode = ExecMode::Noisy { noise: NoiseModel::new("n", 0.01, 0.02, 0.01).unwrap(), shots: Some(200) };
        let exec = LocalExecutor::new("noisy", mode);
        let g = exec.kernel_matrix(&rows, &rows, true, 5, 2).unwrap();
        assert_eq!(g, g.transpose());
        assert_eq!(g, exec.kernel_matrix(&rows, &rows, true, 5, 1).unwrap());
        assert_eq!(kernel_entry_count(4, 4, true), 10);
    }

    #[test]
    fn exec_mode_serde() {
        let m: ExecMode = serde_json::from_str(r#"{"mode":"ideal"}"#).unwrap();
        assert_eq!(m, ExecMode::Ideal);
        let n: ExecMode =
            serde_json::from_str(r#"{"mode":"noisy","noise":{"p1":0.1,"p2":0.2,"p_readout":0.0}}"#).unwrap();
        assert_eq!(n.shots(), None);
        assert_eq!(n.noise().unwrap().p2, 0.2);
    }
}
