//! Distributed quantum reservoir computing for one-step time-series
//! forecasting.
//!
//! The crate is organised bottom-up:
//!
//! - [`simulator`]: statevector and density-matrix simulation.
//! - [`qneuron`]: 4-qubit quantum neurons (angle encoding + fixed ansatz).
//! - [`reservoir`]: random fixed reservoirs of quantum or classical neurons.
//! - [`readout`]: ridge and quantum-kernel ridge readouts, single or split.
//! - [`orchestrator`]: the four architectures, backend placement, worker pool
//!   and the remote worker protocol.
//! - [`data`]: series ingestion, windowing, normalization and metrics.
//! - [`cli`]: the `dqrc` command-line driver.

pub mod error;
pub mod seed;
pub mod simulator;

pub use error::{Error, Result};
pub mod cli;
pub mod data;
pub mod exec;
pub mod orchestrator;
pub mod pool;
pub mod qneuron;
pub mod readout;
pub mod reservoir;
