//! C ABI over the `dqrc` library.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! a [`DqrcStatus`]; on failure the message is available from
//! [`dqrc_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use dqrc::data::{
    compute_metrics, make_windows, synthesize_series, DataSource, DatasetArtifact, SplitSpec, SynthComponents,
    WindowedDataset,
};
use dqrc::error::{Error, ErrorCategory};
use dqrc::orchestrator::{
    assign_backends, build_pipeline, predict, predict_dataset, train, BackendSet, ExperimentConfig, TrainedPipeline,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqrcStatus {
    Ok = 0,
    /// Null pointer, bad UTF-8 or inconsistent sizes.
    InvalidArgument = 1,
    Data = 2,
    Config = 3,
    Service = 4,
    Numerical = 5,
    Internal = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqrcSplit {
    Train = 0,
    Val = 1,
    Test = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DqrcMetrics {
    pub mae: f64,
    pub rmse: f64,
    /// NaN when the true values are constant.
    pub r2: f64,
}

/// Windowed, normalized and split series.
pub struct DqrcDataset {
    artifact: DatasetArtifact,
}

/// Trained pipeline together with the backends it runs on.
pub struct DqrcModel {
    trained: TrainedPipeline,
    backends: BackendSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(DqrcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.category() {
            ErrorCategory::Data => DqrcStatus::Data,
            ErrorCategory::Config => DqrcStatus::Config,
            ErrorCategory::Service => DqrcStatus::Service,
            ErrorCategory::Numerical => DqrcStatus::Numerical,
            ErrorCategory::Invalid => DqrcStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(DqrcStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DqrcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DqrcStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DqrcStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(invalid(format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| invalid(format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(invalid(format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn split_of(ds: &DqrcDataset, split: DqrcSplit) -> &WindowedDataset {
    let d = &ds.artifact.data;
    match split {
        DqrcSplit::Train => &d.train,
        DqrcSplit::Val => &d.val,
        DqrcSplit::Test => &d.test,
    }
}

/// Library version; static storage, do not free.
#[no_mangle]
pub extern "C" fn dqrc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the calling thread's last error message, or null if there is
/// none. Free with [`dqrc_string_free`].
#[no_mangle]
pub extern "C" fn dqrc_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn dqrc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a dataset artifact written by `dqrc prepare`.
///
/// # Safety
/// `path` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dqrc_dataset_load(path: *const c_char, out: *mut *mut DqrcDataset) -> DqrcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        out_arg(out, "out")?;
        let artifact = DatasetArtifact::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(DqrcDataset { artifact }));
        Ok(())
    })
}

/// Builds a dataset from a synthetic series with default components.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dqrc_dataset_synthetic(
    length: usize,
    seed: u64,
    window: usize,
    train: usize,
    val: usize,
    test: usize,
    out: *mut *mut DqrcDataset,
) -> DqrcStatus {
    guard(|| {
        out_arg(out, "out")?;
        let components = SynthComponents::default();
        let series = synthesize_series(length, seed, &components)?;
        let data = make_windows(&series, window, SplitSpec::new(train, val, test))?;
        let artifact = DatasetArtifact::new(DataSource::Synthetic { length, seed, components }, length, data);
        *out = Box::into_raw(Box::new(DqrcDataset { artifact }));
        Ok(())
    })
}

/// # Safety
/// `ds` must be null or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dqrc_dataset_free(ds: *mut DqrcDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Window length of the dataset.
///
/// # Safety
/// `ds` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dqrc_dataset_window(ds: *const DqrcDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.artifact.data.window)
}

/// Number of samples in `split`.
///
/// # Safety
/// `ds` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dqrc_dataset_len(ds: *const DqrcDataset, split: DqrcSplit) -> usize {
    ds.as_ref().map_or(0, |d| split_of(d, split).len())
}

/// Copies the normalized targets of `split` into `out` (capacity `len`).
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dqrc_dataset_targets(
    ds: *const DqrcDataset,
    split: DqrcSplit,
    out: *mut f64,
    len: usize,
) -> DqrcStatus {
    guard(|| {
        let ds = ref_arg(ds, "dataset")?;
        out_arg(out, "out")?;
        let targets = &split_of(ds, split).targets;
        if len != targets.len() {
            return Err(invalid(format!("buffer holds {len} values, split has {}", targets.len())));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(targets);
        Ok(())
    })
}

/// Trains the experiment described by `config_toml` on the dataset's train
/// split. Relative calibration paths resolve against `base_dir` (nullable).
///
/// # Safety
/// Pointers must be valid; `base_dir` may be null.
#[no_mangle]
pub unsafe extern "C" fn dqrc_model_train(
    config_toml: *const c_char,
    base_dir: *const c_char,
    ds: *const DqrcDataset,
    out: *mut *mut DqrcModel,
) -> DqrcStatus {
    guard(|| {
        let config = ExperimentConfig::parse(str_arg(config_toml, "config_toml")?)?;
        let base = if base_dir.is_null() { None } else { Some(PathBuf::from(str_arg(base_dir, "base_dir")?)) };
        let ds = ref_arg(ds, "dataset")?;
        out_arg(out, "out")?;
        let backends = BackendSet::from_specs(&config.backend_specs(), base.as_deref(), config.shots, config.workers)?;
        let pipeline = build_pipeline(&config.architecture, ds.artifact.data.window)?;
        let trained = train(&pipeline, &ds.artifact.data.train, &backends, config.max_train_samples)?;
        *out = Box::into_raw(Box::new(DqrcModel { trained, backends }));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dqrc_model_free(model: *mut DqrcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Predicts `count` windows laid out row-major in `windows`
/// (`count × window_len` normalized values). `first_sample` is the index of
/// the first window in the full windowed series; it keys shot seeds.
///
/// # Safety
/// `windows` must hold `count × window_len` doubles, `out` `count`.
#[no_mangle]
pub unsafe extern "C" fn dqrc_model_predict(
    model: *const DqrcModel,
    windows: *const f64,
    count: usize,
    window_len: usize,
    first_sample: usize,
    out: *mut f64,
) -> DqrcStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        if count == 0 {
            return Ok(());
        }
        if windows.is_null() {
            return Err(invalid("windows is null"));
        }
        out_arg(out, "out")?;
        let want = model.trained.pipeline.window_size;
        if window_len != want {
            return Err(invalid(format!("window length {window_len}, model expects {want}")));
        }
        let flat = std::slice::from_raw_parts(windows, count * window_len);
        let rows: Vec<&[f64]> = flat.chunks(window_len).collect();
        let pred = predict(&model.trained, &rows, first_sample, &model.backends)?;
        std::slice::from_raw_parts_mut(out, count).copy_from_slice(&pred);
        Ok(())
    })
}

/// MAE, RMSE and R² of the model on a dataset split.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dqrc_model_evaluate(
    model: *const DqrcModel,
    ds: *const DqrcDataset,
    split: DqrcSplit,
    out: *mut DqrcMetrics,
) -> DqrcStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let ds = ref_arg(ds, "dataset")?;
        out_arg(out, "out")?;
        let data = split_of(ds, split);
        let pred = predict_dataset(&model.trained, data, &model.backends)?;
        let m = compute_metrics(&data.targets, &pred)?;
        *out = DqrcMetrics { mae: m.mae, rmse: m.rmse, r2: m.r2 };
        Ok(())
    })
}

/// Writes the trained model as JSON.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn dqrc_model_save(model: *const DqrcModel, path: *const c_char) -> DqrcStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        model.trained.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// Serialized trained model. Free with [`dqrc_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dqrc_model_to_json(model: *const DqrcModel, out: *mut *mut c_char) -> DqrcStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        out_arg(out, "out")?;
        let text = serde_json::to_string(&model.trained).map_err(|e| Failure(DqrcStatus::Internal, e.to_string()))?;
        *out = CString::new(text).map_err(|e| Failure(DqrcStatus::Internal, e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Backend index of each of `units` work units over `backends` backends.
///
/// # Safety
/// `out` must point to `units` writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn dqrc_assign_backends(units: usize, backends: usize, out: *mut usize) -> DqrcStatus {
    guard(|| {
        if units == 0 {
            return Ok(());
        }
        out_arg(out, "out")?;
        let a = assign_backends(units, backends)?;
        std::slice::from_raw_parts_mut(out, units).copy_from_slice(&a.units);
        Ok(())
    })
}
