//! Trainable output layers: primal ridge regression, quantum-kernel ridge
//! regression in dual form, and the split multi-instance readout whose
//! prediction is the mean of its instances.

mod kernel;
mod ridge;

use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use kernel::{
    build_kernel_feature_map, kernel_ridge_fit, kernel_ridge_predict, kernel_ridge_predict_many, kernel_value,
    solve_dual, KernelFeatureMapConfig, KernelRidgeModel, DEFAULT_KERNEL_BLOCKS,
};
pub use ridge::{ridge_fit, ridge_predict, RidgeModel};

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::seed::derive_seed;

pub const DEFAULT_LAMBDA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReadoutKind {
    Classical,
    Quantum,
}

impl std::fmt::Display for ReadoutKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReadoutKind::Classical => "classical",
            ReadoutKind::Quantum => "quantum",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadoutSettings {
    pub kind: ReadoutKind,
    pub kernel_qubits: usize,
    pub kernel_blocks: usize,
    pub lambda: f64,
}

impl ReadoutSettings {
    pub fn classical(lambda: f64) -> Self {
        ReadoutSettings {
            kind: ReadoutKind::Classical,
            kernel_qubits: 10,
            kernel_blocks: DEFAULT_KERNEL_BLOCKS,
            lambda,
        }
    }

    pub fn quantum(kernel_qubits: usize, lambda: f64) -> Self {
        ReadoutSettings { kind: ReadoutKind::Quantum, kernel_qubits, kernel_blocks: DEFAULT_KERNEL_BLOCKS, lambda }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ReadoutModel {
    Ridge(RidgeModel),
    Kernel(KernelRidgeModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutInstance {
    pub start: usize,
    pub end: usize,
    pub model: ReadoutModel,
}

impl ReadoutInstance {
    pub fn slice(&self) -> Range<usize> {
        self.start..self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiReadout {
    pub dim: usize,
    pub instances: Vec<ReadoutInstance>,
}

/// Contiguous slices of `0..dim`; when `instances` does not divide `dim` the
/// earlier slices take one extra feature.
pub fn split_slices(dim: usize, instances: usize) -> Result<Vec<Range<usize>>> {
    if instances == 0 {
        return Err(Error::config("at least one readout instance is required"));
    }
    if instances > dim {
        return Err(Error::config(format!("{instances} readout instances for {dim} features")));
    }
    let (base, extra) = (dim / instances, dim % instances);
    let mut start = 0;
    Ok((0..instances)
        .map(|i| {
            let len = base + usize::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

/// Seed of instance `i`'s kernel evaluations.
pub fn instance_seed(seed: u64, instance: usize) -> u64 {
    derive_seed(seed, "readout-instance", &[instance as u64])
}

fn exec_for<'a>(execs: &[&'a dyn Executor], i: usize) -> Result<&'a dyn Executor> {
    execs.get(i).or(execs.first()).copied().ok_or_else(|| Error::config("quantum readout needs a backend"))
}

/// Fits `instances` independent readouts on contiguous feature slices,
/// all against the same targets. `execs[i]` runs instance `i`'s kernel
/// (falls back to `execs[0]`); ignored for classical readouts.
pub fn multi_readout_fit(
    features: &[&[f64]],
    targets: &[f64],
    instances: usize,
    settings: &ReadoutSettings,
    execs: &[&dyn Executor],
    seed: u64,
    workers: usize,
) -> Result<MultiReadout> {
    let dim = features.first().map_or(0, |r| r.len());
    if features.iter().any(|r| r.len() != dim) {
        return Err(Error::structural("feature rows of unequal length"));
    }
    let slices = split_slices(dim, instances)?;
    let mut out = Vec::with_capacity(slices.len());
    for (i, s) in slices.into_iter().enumerate() {
        let sliced: Vec<&[f64]> = features.iter().map(|r| &r[s.clone()]).collect();
        let model = match settings.kind {
            ReadoutKind::Classical => {
                let m = DMatrix::from_fn(s.len(), sliced.len(), |f, c| sliced[c][f]);
                ReadoutModel::Ridge(ridge_fit(&m, targets, settings.lambda)?)
            }
            ReadoutKind::Quantum => {
                let config =
                    KernelFeatureMapConfig::for_dimension(settings.kernel_qubits, settings.kernel_blocks, s.len())?;
                ReadoutModel::Kernel(kernel_ridge_fit(
                    &sliced,
                    targets,
                    config,
                    settings.lambda,
                    exec_for(execs, i)?,
                    instance_seed(seed, i),
                    workers,
                )?)
            }
        };
        out.push(ReadoutInstance { start: s.start, end: s.end, model });
    }
    Ok(MultiReadout { dim, instances: out })
}

pub fn multi_readout_predict(model: &MultiReadout, feature: &[f64], execs: &[&dyn Executor], seed: u64) -> Result<f64> {
    Ok(multi_readout_predict_many(model, &[feature], execs, seed, 1)?[0])
}

/// Mean of the instance predictions for every row.
pub fn multi_readout_predict_many(
    model: &MultiReadout,
    features: &[&[f64]],
    execs: &[&dyn Executor],
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    if features.iter().any(|r| r.len() != model.dim) {
        return Err(Error::structural(format!("readout expects {} features", model.dim)));
    }
    let mut sums = vec![0.0; features.len()];
    for (i, inst) in model.instances.iter().enumerate() {
        let sliced: Vec<&[f64]> = features.iter().map(|r| &r[inst.slice()]).collect();
        let preds = match &inst.model {
            ReadoutModel::Ridge(m) => sliced.iter().map(|r| ridge_predict(m, r)).collect::<Result<Vec<_>>>()?,
            ReadoutModel::Kernel(m) => {
                kernel_ridge_predict_many(m, &sliced, exec_for(execs, i)?, instance_seed(seed, i), workers)?
            }
        };
        for (s, p) in sums.iter_mut().zip(preds) {
            *s += p;
        }
    }
    let count = model.instances.len() as f64;
    Ok(sums.into_iter().map(|s| s / count).collect())
}
