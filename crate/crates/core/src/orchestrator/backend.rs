use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::config::BackendSpec;
use super::protocol::RemoteExecutor;
use crate::error::{Error, ErrorCategory, Result};
use crate::exec::{kernel_entry_count, ExecMode, Executor, ExpectationJob, KernelJob, LocalExecutor};
use crate::pool::default_workers;
use crate::simulator::Circuit;

/// Circuits completed on one backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchCounts {
    pub backend: String,
    /// Neuron circuits (`⟨Z⟩` evaluations).
    pub expectation: u64,
    /// Kernel entries (overlap evaluations).
    pub kernel: u64,
}

impl DispatchCounts {
    pub fn total(&self) -> u64 {
        self.expectation + self.kernel
    }
}

/// Counts the circuits an executor completes successfully.
pub struct Instrumented {
    inner: Box<dyn Executor>,
    expectation: AtomicU64,
    kernel: AtomicU64,
}

impl Instrumented {
    pub fn new(inner: Box<dyn Executor>) -> Self {
        Instrumented { inner, expectation: AtomicU64::new(0), kernel: AtomicU64::new(0) }
    }

    pub fn counts(&self) -> DispatchCounts {
        DispatchCounts {
            backend: self.inner.name().to_string(),
            expectation: self.expectation.load(Ordering::SeqCst),
            kernel: self.kernel.load(Ordering::SeqCst),
        }
    }

    pub fn reset(&self) {
        self.expectation.store(0, Ordering::SeqCst);
        self.kernel.store(0, Ordering::SeqCst);
    }
}

impl Executor for Instrumented {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn mode(&self) -> &ExecMode {
        self.inner.mode()
    }

    fn expectation_batch(&self, jobs: &[ExpectationJob]) -> Result<Vec<f64>> {
        let v = self.inner.expectation_batch(jobs)?;
        self.expectation.fetch_add(jobs.len() as u64, Ordering::SeqCst);
        Ok(v)
    }

    fn kernel_batch(&self, jobs: &[KernelJob]) -> Result<Vec<f64>> {
        let v = self.inner.kernel_batch(jobs)?;
        self.kernel.fetch_add(jobs.len() as u64, Ordering::SeqCst);
        Ok(v)
    }

    fn kernel_matrix(
        &self,
        rows: &[Circuit],
        cols: &[Circuit],
        symmetric: bool,
        seed: u64,
        workers: usize,
    ) -> Result<DMatrix<f64>> {
        let m = self.inner.kernel_matrix(rows, cols, symmetric, seed, workers)?;
        self.kernel.fetch_add(kernel_entry_count(rows.len(), cols.len(), symmetric), Ordering::SeqCst);
        Ok(m)
    }
}

/// Retries a failed service call once; a second failure is reported as a
/// failed work unit.
pub(crate) struct Retry<'a> {
    pub inner: &'a dyn Executor,
    pub unit: String,
}

impl Retry<'_> {
    fn call<T>(&self, f: impl Fn() -> Result<T>) -> Result<T> {
        match f() {
            Err(e) if e.category() == ErrorCategory::Service => f().map_err(|e| Error::UnitFailed {
                unit: self.unit.clone(),
                backend: self.inner.name().to_string(),
                message: e.to_string(),
            }),
            other => other,
        }
    }
}

impl Executor for Retry<'_> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn mode(&self) -> &ExecMode {
        self.inner.mode()
    }

    fn expectation_batch(&self, jobs: &[ExpectationJob]) -> Result<Vec<f64>> {
        self.call(|| self.inner.expectation_batch(jobs))
    }

    fn kernel_batch(&self, jobs: &[KernelJob]) -> Result<Vec<f64>> {
        self.call(|| self.inner.kernel_batch(jobs))
    }

    fn kernel_matrix(
        &self,
        rows: &[Circuit],
        cols: &[Circuit],
        symmetric: bool,
        seed: u64,
        workers: usize,
    ) -> Result<DMatrix<f64>> {
        self.call(|| self.inner.kernel_matrix(rows, cols, symmetric, seed, workers))
    }
}

/// Ordered backends plus the worker-pool size used to drive them.
#[derive(Clone)]
pub struct BackendSet {
    backends: Vec<Arc<Instrumented>>,
    pub workers: usize,
}

impl BackendSet {
    pub fn new(executors: Vec<Box<dyn Executor>>, workers: usize) -> Result<Self> {
        if executors.is_empty() {
            return Err(Error::config("at least one backend is required"));
        }
        Ok(BackendSet {
            backends: executors.into_iter().map(|e| Arc::new(Instrumented::new(e))).collect(),
            workers: workers.max(1),
        })
    }

    /// `count` in-process ideal backends named `ideal-0`, `ideal-1`, ...
    pub fn ideal(count: usize, workers: usize) -> Result<Self> {
        let execs = (0..count)
            .map(|i| Box::new(LocalExecutor::new(format!("ideal-{i}"), ExecMode::Ideal)) as Box<dyn Executor>)
            .collect();
        BackendSet::new(execs, workers)
    }

    /// Builds executors from specs; calibration paths resolve against `base`.
    pub fn from_specs(
        specs: &[BackendSpec],
        base: Option<&Path>,
        default_shots: Option<u32>,
        workers: Option<usize>,
    ) -> Result<Self> {
        let execs = specs
            .iter()
            .map(|s| -> Result<Box<dyn Executor>> {
                let mode = s.exec_mode(base, default_shots)?;
                Ok(match &s.address {
                    Some(addr) => Box::new(RemoteExecutor::new(s.name.clone(), mode, addr.clone())),
                    None => Box::new(LocalExecutor::new(s.name.clone(), mode)),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        BackendSet::new(execs, workers.unwrap_or_else(default_workers))
    }

    pub fn len(&self) -> usize {
        self.backends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backends.is_empty()
    }

    pub fn get(&self, i: usize) -> &dyn Executor {
        self.backends[i].as_ref()
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    pub fn dispatch_counts(&self) -> Vec<DispatchCounts> {
        self.backends.iter().map(|b| b.counts()).collect()
    }

    pub fn reset_counts(&self) {
        self.backends.iter().for_each(|b| b.reset());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    struct Flaky {
        failures: AtomicUsize,
        mode: ExecMode,
    }

    impl Executor for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }
        fn mode(&self) -> &ExecMode {
            &self.mode
        }
        fn expectation_batch(&self, jobs: &[ExpectationJob]) -> Result<Vec<f64>> {
            if self.failures.load(Ordering::SeqCst) > 0 {
                self.failures.fetch_sub(1, Ordering::SeqCst);
                return Err(Error::Service("boom".into()));
            }
            Ok(vec![0.5; jobs.len()])
        }
        fn kernel_batch(&self, jobs: &[KernelJob]) -> Result<Vec<f64>> {
            Ok(vec![1.0; jobs.len()])
        }
    }

    fn job() -> ExpectationJob {
        ExpectationJob { circuit: Circuit::new(1).unwrap(), qubit: 0, seed: 0 }
    }

    #[test]
    fn retry_once_then_fail() {
        let once = Flaky { failures: AtomicUsize::new(1), mode: ExecMode::Ideal };
        let r = Retry { inner: &once, unit: "u".into() };
        assert_eq!(r.expectation_batch(&[job()]).unwrap(), vec![0.5]);
        let twice = Flaky { failures: AtomicUsize::new(2), mode: ExecMode::Ideal };
        let r = Retry { inner: &twice, unit: "reservoir 3".into() };
        match r.expectation_batch(&[job()]) {
            Err(Error::UnitFailed { unit, backend, .. }) => {
                assert_eq!((unit.as_str(), backend.as_str()), ("reservoir 3", "flaky"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn counts_successful_jobs() {
        let set = BackendSet::ideal(2, 1).unwrap();
        set.get(1).expectation_batch(&[job(), job()]).unwrap();
        let c = set.dispatch_counts();
        assert_eq!((c[0].total(), c[1].expectation), (0, 2));
        let cs = vec![Circuit::new(1).unwrap(); 3];
        set.get(0).kernel_matrix(&cs, &cs, true, 0, 1).unwrap();
        assert_eq!(set.dispatch_counts()[0].kernel, 6);
        set.reset_counts();
        assert_eq!(set.dispatch_counts()[1].total(), 0);
    }
}
