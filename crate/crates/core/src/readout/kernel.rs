use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::ridge::{check_lambda, min_eigenvalue};
use crate::error::{Error, Result};
use crate::exec::{Executor, KernelJob};
use crate::simulator::{Circuit, Gate};

pub const DEFAULT_KERNEL_BLOCKS: usize = 2;

/// Hadamard–phase feature map shape: `num_blocks` blocks, each made of
/// `num_layers` layers of `H^⊗n` followed by a row of phase gates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelFeatureMapConfig {
    pub num_qubits: usize,
    pub num_blocks: usize,
    pub num_layers: usize,
}

impl KernelFeatureMapConfig {
    /// Sizes the map for `dim` features: `L = ceil(dim / n)`.
    pub fn for_dimension(num_qubits: usize, num_blocks: usize, dim: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::validation("kernel feature map needs at least one qubit"));
        }
        let c = KernelFeatureMapConfig { num_qubits, num_blocks, num_layers: dim.div_ceil(num_qubits).max(1) };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 || self.num_blocks == 0 || self.num_layers == 0 {
            return Err(Error::validation(format!("invalid kernel feature map {self:?}")));
        }
        Ok(())
    }

    pub fn capacity(&self) -> usize {
        self.num_qubits * self.num_layers
    }
}

/// For each block and each layer `l`: `H` on every qubit, then
/// `PHASE(2·x[l·n + q])` on qubit `q`, with missing features read as 0.
pub fn build_kernel_feature_map(config: &KernelFeatureMapConfig, feature: &[f64]) -> Result<Circuit> {
    config.validate()?;
    if feature.len() > config.capacity() {
        return Err(Error::structural(format!(
            "{} features exceed the {}-qubit × {}-layer map",
            feature.len(),
            config.num_qubits,
            config.num_layers
        )));
    }
    let n = config.num_qubits;
    let mut c = Circuit::new(n)?;
    for _ in 0..config.num_blocks {
        for l in 0..config.num_layers {
            for q in 0..n {
                c.push(Gate::h(q))?;
            }
            for q in 0..n {
                let x = feature.get(l * n + q).copied().unwrap_or(0.0);
                c.push(Gate::phase(q, 2.0 * x))?;
            }
        }
    }
    Ok(c)
}

pub fn kernel_value(
    config: &KernelFeatureMapConfig,
    a: &[f64],
    b: &[f64],
    exec: &dyn Executor,
    seed: u64,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::structural(format!("kernel arguments of length {} and {}", a.len(), b.len())));
    }
    let job = KernelJob { a: build_kernel_feature_map(config, a)?, b: build_kernel_feature_map(config, b)?, seed };
    Ok(exec.kernel_batch(std::slice::from_ref(&job))?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRidgeModel {
    /// Stored training feature vectors, one per row.
    pub support_samples: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub config: KernelFeatureMapConfig,
    pub lambda: f64,
}

/// Dual ridge solve `α = (G + λI)⁻¹ y` by Cholesky.
pub fn solve_dual(gram: &DMatrix<f64>, targets: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let m = gram.nrows();
    if gram.ncols() != m || targets.len() != m {
        return Err(Error::structural(format!(
            "gram {}×{} with {} targets",
            gram.nrows(),
            gram.ncols(),
            targets.len()
        )));
    }
    let mut reg = gram.clone();
    for i in 0..m {
        reg[(i, i)] += lambda;
    }
    let chol = reg.clone().cholesky().ok_or_else(|| Error::Numerical {
        message: "regularized Gram matrix is not positive definite".into(),
        min_eigenvalue: min_eigenvalue(gram),
    })?;
    Ok(chol.solve(&DVector::from_column_slice(targets)).iter().copied().collect())
}

pub(crate) fn feature_circuits(config: &KernelFeatureMapConfig, rows: &[&[f64]]) -> Result<Vec<Circuit>> {
    rows.iter().map(|r| build_kernel_feature_map(config, r)).collect()
}

fn check_rows(rows: &[&[f64]], dim: Option<usize>) -> Result<usize> {
    let d = dim.or_else(|| rows.first().map(|r| r.len())).unwrap_or(0);
    if rows.iter().any(|r| r.len() != d) {
        return Err(Error::structural("feature rows of unequal length"));
    }
    if rows.iter().flat_map(|r| r.iter()).any(|v| !v.is_finite()) {
        return Err(Error::validation("non-finite kernel feature"));
    }
    Ok(d)
}

/// Fits a kernel ridge model on `features` (one row per sample). The Gram
/// matrix is evaluated upper-triangle-only through `exec`.
pub fn kernel_ridge_fit(
    features: &[&[f64]],
    targets: &[f64],
    config: KernelFeatureMapConfig,
    lambda: f64,
    exec: &dyn Executor,
    seed: u64,
    workers: usize,
) -> Result<KernelRidgeModel> {
    check_lambda(lambda)?;
    if features.is_empty() {
        return Err(Error::validation("kernel ridge fit needs at least one sample"));
    }
    check_rows(features, None)?;
    if targets.len() != features.len() {
        return Err(Error::structural(format!("{} targets for {} samples", targets.len(), features.len())));
    }
    let circuits = feature_circuits(&config, features)?;
    let gram = exec.kernel_matrix(&circuits, &circuits, true, seed, workers)?;
    let alphas = solve_dual(&gram, targets, lambda)?;
    Ok(KernelRidgeModel { support_samples: features.iter().map(|r| r.to_vec()).collect(), alphas, config, lambda })
}

pub fn kernel_ridge_predict(model: &KernelRidgeModel, feature: &[f64], exec: &dyn Executor, seed: u64) -> Result<f64> {
    Ok(kernel_ridge_predict_many(model, &[feature], exec, seed, 1)?[0])
}

/// `Σ_i α_i K(x, s_i)` for every row `x`.
pub fn kernel_ridge_predict_many(
    model: &KernelRidgeModel,
    features: &[&[f64]],
    exec: &dyn Executor,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    let dim = model.support_samples.first().map(Vec::len);
    check_rows(features, dim)?;
    if features.is_empty() {
        return Ok(Vec::new());
    }
    let support: Vec<&[f64]> = model.support_samples.iter().map(Vec::as_slice).collect();
    let rows = feature_circuits(&model.config, features)?;
    let cols = feature_circuits(&model.config, &support)?;
    let k = exec.kernel_matrix(&rows, &cols, false, seed, workers)?;
    let alphas = DVector::from_column_slice(&model.alphas);
    Ok((k * alphas).iter().copied().collect())
}
