//! Composition of reservoirs and readouts into the four architectures,
//! placement of work onto backends, and the worker protocol.

mod assign;
mod backend;
mod config;
mod pipeline;
pub mod protocol;

pub use assign::{assign_backends, Assignment};
pub use backend::{BackendSet, DispatchCounts, Instrumented};
pub use config::{
    ArchitectureConfig, BackendMode, BackendSpec, DatasetConfig, ExperimentConfig, Variant, DEFAULT_MAX_TRAIN_SAMPLES,
};
pub use pipeline::{
    build_pipeline, predict, predict_dataset, reservoir_features, reservoir_seed, sample_seed, train, train_stride,
    Pipeline, TrainedPipeline,
};
pub use protocol::{
    worker_call, worker_serve, FaultInjector, RemoteExecutor, Request, Response, WorkerHandle, WorkerOptions,
    WorkerServer,
};
