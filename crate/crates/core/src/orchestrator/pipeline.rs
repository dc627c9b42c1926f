use std::path::Path;

use serde::{Deserialize, Serialize};

use super::assign::{assign_backends, Assignment};
use super::backend::{BackendSet, Retry};
use super::config::ArchitectureConfig;
use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::pool::{chunks, run_indexed};
use crate::qneuron::NeuronParams;
use crate::readout::{multi_readout_fit, multi_readout_predict_many, MultiReadout, ReadoutKind};
use crate::reservoir::{generate_reservoir, reservoir_forward_many, NeuronWeights, ReservoirSpec, ReservoirState};
use crate::seed::derive_seed;

/// Samples per reservoir work unit.
const SAMPLE_CHUNK: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pipeline {
    pub config: ArchitectureConfig,
    pub window_size: usize,
    pub reservoirs: Vec<ReservoirSpec>,
}

impl Pipeline {
    pub fn feature_dim(&self) -> usize {
        self.reservoirs.iter().map(|r| r.num_neurons).sum()
    }
}

pub fn reservoir_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, "reservoir", &[index as u64])
}

/// Shot-seed base of `sample` (absolute index in the windowed series) on
/// reservoir `reservoir`.
pub fn sample_seed(master: u64, reservoir: usize, sample: u64) -> u64 {
    derive_seed(master, "sample", &[reservoir as u64, sample])
}

pub fn build_pipeline(config: &ArchitectureConfig, window_size: usize) -> Result<Pipeline> {
    config.validate()?;
    let reservoirs = (0..config.num_reservoirs)
        .map(|i| {
            let mut spec = generate_reservoir(
                config.neurons_per_reservoir,
                window_size,
                config.reservoir_kind,
                reservoir_seed(config.seed, i),
            )?;
            spec.passes = config.passes;
            spec.input_order = config.input_order;
            for n in &mut spec.neurons {
                if let NeuronWeights::Quantum(p) = n {
                    *p = NeuronParams::clone(p).with_observable(config.observable)?;
                }
            }
            spec.validate()?;
            Ok(spec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Pipeline { config: config.clone(), window_size, reservoirs })
}

/// Concatenated reservoir outputs for every window, in window order.
/// `sample_ids[s]` keys the shot seeds of window `s`.
pub fn reservoir_features(
    pipeline: &Pipeline,
    windows: &[&[f64]],
    sample_ids: &[u64],
    backends: &BackendSet,
) -> Result<Vec<Vec<f64>>> {
    if windows.len() != sample_ids.len() {
        return Err(Error::structural("one sample id per window required"));
    }
    let placement = assign_backends(pipeline.reservoirs.len(), backends.len())?;
    let parts = chunks(windows.len(), SAMPLE_CHUNK);
    let tasks = pipeline.reservoirs.len() * parts.len();
    let master = pipeline.config.seed;
    let states: Vec<Vec<ReservoirState>> = run_indexed(backends.workers, tasks, |t| {
        let (r, c) = (t / parts.len(), t % parts.len());
        let range = parts[c].clone();
        let exec = Retry {
            inner: backends.get(placement.backend_of(r)),
            unit: format!("reservoir {r} samples {}..{}", range.start, range.end),
        };
        let seeds: Vec<u64> = sample_ids[range.clone()].iter().map(|&s| sample_seed(master, r, s)).collect();
        reservoir_forward_many(&pipeline.reservoirs[r], &windows[range], &exec, &seeds)
    })?;
    let mut features: Vec<Vec<f64>> = (0..windows.len()).map(|_| Vec::with_capacity(pipeline.feature_dim())).collect();
    for r in 0..pipeline.reservoirs.len() {
        let per_reservoir = states[r * parts.len()..(r + 1) * parts.len()].iter().flatten();
        for (f, s) in features.iter_mut().zip(per_reservoir) {
            f.extend_from_slice(&s.values);
        }
    }
    Ok(features)
}

fn readout_execs<'a>(units: usize, backends: &'a BackendSet) -> Result<(Assignment, Vec<Retry<'a>>)> {
    let placement = assign_backends(units, backends.len())?;
    let execs = (0..units)
        .map(|i| Retry { inner: backends.get(placement.backend_of(i)), unit: format!("readout instance {i}") })
        .collect();
    Ok((placement, execs))
}

/// Training-sample stride: kernel readouts are fit on at most
/// `max_train_samples` evenly strided samples; ridge readouts use all.
pub fn train_stride(config: &ArchitectureConfig, samples: usize, max_train_samples: Option<usize>) -> usize {
    match (config.readout_kind, max_train_samples) {
        (ReadoutKind::Quantum, Some(max)) if max > 0 => samples.div_ceil(max).max(1),
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedPipeline {
    pub pipeline: Pipeline,
    pub readout: MultiReadout,
    pub stride: usize,
    pub train_samples: usize,
    pub reservoir_placement: Assignment,
    pub readout_placement: Assignment,
}

impl TrainedPipeline {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Runs every reservoir over the training windows, then fits the readout
/// instances. Deterministic given the config seed, data and backend modes.
pub fn train(
    pipeline: &Pipeline,
    dataset: &WindowedDataset,
    backends: &BackendSet,
    max_train_samples: Option<usize>,
) -> Result<TrainedPipeline> {
    if dataset.is_empty() {
        return Err(Error::data("empty training set"));
    }
    if let Some(w) = dataset.windows.iter().find(|w| w.len() != pipeline.window_size) {
        return Err(Error::data(format!(
            "dataset window of length {} for a pipeline built for {}",
            w.len(),
            pipeline.window_size
        )));
    }
    let stride = train_stride(&pipeline.config, dataset.len(), max_train_samples);
    let subset = dataset.strided(stride);
    let ids: Vec<u64> = (0..subset.len()).map(|i| (dataset.offset + i * stride) as u64).collect();
    let features = reservoir_features(pipeline, &subset.window_refs(), &ids, backends)?;
    let rows: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let cfg = &pipeline.config;
    let (readout_placement, execs) = readout_execs(cfg.ridge_instances, backends)?;
    let exec_refs: Vec<&dyn Executor> = execs.iter().map(|e| e as &dyn Executor).collect();
    let readout = multi_readout_fit(
        &rows,
        &subset.targets,
        cfg.ridge_instances,
        &cfg.readout_settings(),
        &exec_refs,
        derive_seed(cfg.seed, "readout-fit", &[]),
        backends.workers,
    )?;
    Ok(TrainedPipeline {
        pipeline: pipeline.clone(),
        readout,
        stride,
        train_samples: subset.len(),
        reservoir_placement: assign_backends(pipeline.reservoirs.len(), backends.len())?,
        readout_placement,
    })
}

/// Predictions for `windows`, whose first element is sample `first_sample`
/// of the windowed series (this keys noisy shot seeds).
pub fn predict(
    trained: &TrainedPipeline,
    windows: &[&[f64]],
    first_sample: usize,
    backends: &BackendSet,
) -> Result<Vec<f64>> {
    let p = &trained.pipeline;
    if let Some(w) = windows.iter().find(|w| w.len() != p.window_size) {
        return Err(Error::data(format!("window of length {} for a pipeline built for {}", w.len(), p.window_size)));
    }
    let ids: Vec<u64> = (0..windows.len()).map(|i| (first_sample + i) as u64).collect();
    let features = reservoir_features(p, windows, &ids, backends)?;
    let rows: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    let (_, execs) = readout_execs(trained.readout.instances.len(), backends)?;
    let exec_refs: Vec<&dyn Executor> = execs.iter().map(|e| e as &dyn Executor).collect();
    multi_readout_predict_many(
        &trained.readout,
        &rows,
        &exec_refs,
        derive_seed(p.config.seed, "readout-predict", &[first_sample as u64]),
        backends.workers,
    )
}

/// [`predict`] over a windowed split.
pub fn predict_dataset(
    trained: &TrainedPipeline,
    dataset: &WindowedDataset,
    backends: &BackendSet,
) -> Result<Vec<f64>> {
    predict(trained, &dataset.window_refs(), dataset.offset, backends)
}
