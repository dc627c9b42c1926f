use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use dqrc_ffi::*;

fn last_error() -> String {
    let p = dqrc_last_error();
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { dqrc_string_free(p) };
    s
}

fn synthetic() -> *mut DqrcDataset {
    let mut ds = ptr::null_mut();
    assert_eq!(unsafe { dqrc_dataset_synthetic(204, 1, 4, 120, 40, 40, &mut ds) }, DqrcStatus::Ok);
    ds
}

const CONFIG: &str = "variant = \"MRSR\"\nreservoirs = 2\nneurons_per_reservoir = 3\n\
                      reservoir_kind = \"quantum\"\nreadout_kind = \"classical\"\nseed = 4\nworkers = 2\n";

#[test]
fn train_predict_evaluate() {
    let ds = synthetic();
    assert_eq!(unsafe { dqrc_dataset_window(ds) }, 4);
    assert_eq!(unsafe { dqrc_dataset_len(ds, DqrcSplit::Test) }, 40);
    let config = CString::new(CONFIG).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { dqrc_model_train(config.as_ptr(), ptr::null(), ds, &mut model) }, DqrcStatus::Ok);

    let mut metrics = DqrcMetrics::default();
    assert_eq!(unsafe { dqrc_model_evaluate(model, ds, DqrcSplit::Test, &mut metrics) }, DqrcStatus::Ok);
    assert!(metrics.rmse >= metrics.mae && metrics.mae > 0.0);

    let windows = [0.2, 0.4, 0.6, 0.8, 0.4, 0.6, 0.8, 0.9];
    let mut out = [0.0; 2];
    assert_eq!(unsafe { dqrc_model_predict(model, windows.as_ptr(), 2, 4, 0, out.as_mut_ptr()) }, DqrcStatus::Ok);
    assert!(out.iter().all(|v| v.is_finite()));
    assert_eq!(
        unsafe { dqrc_model_predict(model, windows.as_ptr(), 2, 3, 0, out.as_mut_ptr()) },
        DqrcStatus::InvalidArgument
    );
    assert!(last_error().contains("window length"));

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { dqrc_model_to_json(model, &mut json) }, DqrcStatus::Ok);
    assert!(unsafe { CStr::from_ptr(json) }.to_str().unwrap().contains("\"readout\""));
    unsafe {
        dqrc_string_free(json);
        dqrc_model_free(model);
        dqrc_dataset_free(ds);
    }
}

#[test]
fn error_codes() {
    let bad = CString::new("variant = \"SRSR\"\nreservoirs = 2\nneurons_per_reservoir = 3\nreservoir_kind = \"quantum\"\nreadout_kind = \"classical\"\n").unwrap();
    let ds = synthetic();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { dqrc_model_train(bad.as_ptr(), ptr::null(), ds, &mut model) }, DqrcStatus::Config);
    assert!(model.is_null());

    let missing = CString::new("/no/such/dataset.json").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { dqrc_dataset_load(missing.as_ptr(), &mut out) }, DqrcStatus::Data);
    assert!(last_error().contains("/no/such/dataset.json"));
    assert_eq!(unsafe { dqrc_dataset_load(ptr::null(), &mut out) }, DqrcStatus::InvalidArgument);

    let mut targets = [0.0; 3];
    assert_eq!(
        unsafe { dqrc_dataset_targets(ds, DqrcSplit::Val, targets.as_mut_ptr(), 3) },
        DqrcStatus::InvalidArgument
    );
    unsafe { dqrc_dataset_free(ds) };
}

#[test]
fn placement_table() {
    let mut out = [0usize; 5];
    assert_eq!(unsafe { dqrc_assign_backends(5, 3, out.as_mut_ptr()) }, DqrcStatus::Ok);
    let mut counts = [0; 3];
    out.iter().for_each(|&b| counts[b] += 1);
    assert_eq!(counts, [2, 2, 1]);
    let mut one = [9usize];
    assert_eq!(unsafe { dqrc_assign_backends(1, 3, one.as_mut_ptr()) }, DqrcStatus::Ok);
    assert_eq!(one, [1]);
    assert_eq!(unsafe { dqrc_assign_backends(2, 0, out.as_mut_ptr()) }, DqrcStatus::Config);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(dqrc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/dqrc.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "typedef struct DqrcModel DqrcModel",
        "DQRC_STATUS_CONFIG = 3",
        "dqrc_model_train",
        "dqrc_model_predict",
        "dqrc_last_error",
        "dqrc_string_free",
    ] {
        assert!(text.contains(name), "missing {name}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        return;
    };
    if !cc.status.success() {
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"dqrc.h\"\nint main(void) {\n  DqrcDataset *ds = 0;\n  DqrcStatus s = dqrc_dataset_synthetic(100, 1, 4, 60, 20, 16, &ds);\n  \
         dqrc_dataset_free(ds);\n  return s == DQRC_STATUS_OK ? 0 : 1;\n}\n",
    )
    .unwrap();
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
