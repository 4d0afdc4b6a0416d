use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use typlab_ffi::*;

const BSC: &str = include_str!("../../core/fixtures/bsc.json");

fn last_error() -> String {
    let p = typlab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn model() -> *mut TyplabModel {
    let json = CString::new(BSC).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { typlab_model_from_json(json.as_ptr(), &mut m) }, TyplabStatus::Ok);
    assert!(!m.is_null());
    m
}

/// 100 symbols whose type is exactly the BSC chain's law.
fn exact_type() -> (Vec<u64>, Vec<u64>, Vec<u64>) {
    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for (atom, count) in [
        ([0, 0, 0], 36),
        ([1, 0, 0], 9),
        ([0, 0, 1], 4),
        ([1, 0, 1], 1),
        ([1, 1, 1], 36),
        ([0, 1, 1], 9),
        ([1, 1, 0], 4),
        ([0, 1, 0], 1),
    ] {
        for _ in 0..count {
            x.push(atom[0]);
            y.push(atom[1]);
            z.push(atom[2]);
        }
    }
    (x, y, z)
}

#[test]
fn model_queries() {
    let m = model();
    let mut c = 0.0;
    assert_eq!(unsafe { typlab_model_log_moment_bound(m, &mut c) }, TyplabStatus::Ok);
    // 0.8 log2^2 0.8 + 0.2 log2^2 0.2
    let oracle = 0.8 * 0.8f64.log2().powi(2) + 0.2 * 0.2f64.log2().powi(2);
    assert!((c - oracle).abs() < 1e-12);
    let mut h = 0.0;
    let vars = CString::new("Y").unwrap();
    assert_eq!(unsafe { typlab_model_entropy(m, vars.as_ptr(), &mut h) }, TyplabStatus::Ok);
    assert!((h - 1.0).abs() < 1e-12);
    let bad = CString::new("W").unwrap();
    assert_eq!(unsafe { typlab_model_entropy(m, bad.as_ptr(), &mut h) }, TyplabStatus::InvalidArgument);
    assert!(last_error().contains("W"));
    unsafe { typlab_model_free(m) };
}

#[test]
fn typicality_round_trip() {
    let m = model();
    let (x, y, z) = exact_type();
    let mut q = ptr::null_mut();
    let st = unsafe { typlab_type_from_sequences(x.as_ptr(), y.as_ptr(), z.as_ptr(), x.len(), &mut q) };
    assert_eq!(st, TyplabStatus::Ok);

    let unified3 = CString::new("unified3").unwrap();
    let mut score = f64::NAN;
    assert_eq!(unsafe { typlab_score(q, m, unified3.as_ptr(), &mut score) }, TyplabStatus::Ok);
    assert!(score.abs() < 1e-12);

    let mut member = false;
    assert_eq!(unsafe { typlab_is_typical(q, m, 0.25, unified3.as_ptr(), &mut member) }, TyplabStatus::Ok);
    assert!(member);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { typlab_report_json(q, m, 0.25, unified3.as_ptr(), &mut json) }, TyplabStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { typlab_string_free(json) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["member"], true);

    let bogus = CString::new("strong").unwrap();
    assert_eq!(unsafe { typlab_score(q, m, bogus.as_ptr(), &mut score) }, TyplabStatus::InvalidArgument);
    assert!(last_error().contains("strong"));

    unsafe {
        typlab_type_free(q);
        typlab_model_free(m);
    }
}

#[test]
fn off_support_score_is_infinite() {
    let m = model();
    let (x, y, z) = (vec![7u64], vec![0u64], vec![0u64]);
    let mut q = ptr::null_mut();
    unsafe { typlab_type_from_sequences(x.as_ptr(), y.as_ptr(), z.as_ptr(), 1, &mut q) };
    let two_term = CString::new("two_term").unwrap();
    let mut score = 0.0;
    assert_eq!(unsafe { typlab_score(q, m, two_term.as_ptr(), &mut score) }, TyplabStatus::Ok);
    assert_eq!(score, f64::INFINITY);
    unsafe {
        typlab_type_free(q);
        typlab_model_free(m);
    }
}

#[test]
fn dense_measures() {
    let q = [0.5, 0.5];
    let p = [0.25, 0.75];
    let mut out = 0.0;
    assert_eq!(unsafe { typlab_entropy(q.as_ptr(), 2, &mut out) }, TyplabStatus::Ok);
    assert_eq!(out, 1.0);
    assert_eq!(unsafe { typlab_kl_divergence(q.as_ptr(), p.as_ptr(), 2, &mut out) }, TyplabStatus::Ok);
    let oracle = 0.5 * (0.5f64 / 0.25).log2() + 0.5 * (0.5f64 / 0.75).log2();
    assert!((out - oracle).abs() < 1e-15);
    assert_eq!(unsafe { typlab_variational_distance(q.as_ptr(), p.as_ptr(), 2, &mut out) }, TyplabStatus::Ok);
    assert!((out - 0.5).abs() < 1e-15);
    let neg = [-0.1, 1.1];
    assert_eq!(unsafe { typlab_entropy(neg.as_ptr(), 2, &mut out) }, TyplabStatus::InvalidArgument);
}

#[test]
fn error_codes() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { typlab_model_from_json(ptr::null(), &mut m) }, TyplabStatus::NullPointer);
    let garbage = CString::new("{\"side\":").unwrap();
    assert_eq!(unsafe { typlab_model_from_json(garbage.as_ptr(), &mut m) }, TyplabStatus::ParseError);
    let missing_row = CString::new(r#"{"side":[[0,0,0.5],[1,1,0.5]],"kernel":{"0":{"kind":"geometric","p":0.5}}}"#).unwrap();
    assert_eq!(unsafe { typlab_model_from_json(missing_row.as_ptr(), &mut m) }, TyplabStatus::InvalidModel);
    assert!(last_error().contains("y=1"));
    assert!(m.is_null());

    let x = [0u64, 1];
    let y = [0u64];
    let mut q = ptr::null_mut();
    // lengths are passed explicitly, so a mismatch can only come from a short buffer;
    // a null buffer with nonzero length is rejected
    assert_eq!(
        unsafe { typlab_type_from_sequences(x.as_ptr(), ptr::null(), y.as_ptr(), 1, &mut q) },
        TyplabStatus::NullPointer
    );
    let mut out = 0.0;
    assert_eq!(unsafe { typlab_model_log_moment_bound(ptr::null(), &mut out) }, TyplabStatus::NullPointer);
    // a successful call clears the message
    assert_eq!(unsafe { typlab_entropy([1.0].as_ptr(), 1, &mut out) }, TyplabStatus::Ok);
    assert!(typlab_last_error().is_null());
    unsafe {
        typlab_model_free(ptr::null_mut());
        typlab_type_free(ptr::null_mut());
        typlab_string_free(ptr::null_mut());
    }
}

#[test]
fn sweep_is_worker_invariant() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.json"), BSC).unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(
        &cfg,
        r#"{"variant":"theorem1","model":"m.json","gamma":0.25,"eta":0.1,"n_grid":[50,200],"trials":60,"seed":11}"#,
    )
    .unwrap();
    let path = CString::new(cfg.to_str().unwrap()).unwrap();
    let run = |workers| {
        let mut csv = ptr::null_mut();
        let st = unsafe { typlab_run_sweep(path.as_ptr(), workers, &mut csv) };
        assert_eq!(st, TyplabStatus::Ok, "{}", last_error());
        let text = unsafe { CStr::from_ptr(csv) }.to_str().unwrap().to_owned();
        unsafe { typlab_string_free(csv) };
        text
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one.lines().count(), 3);
    assert!(one.starts_with("variant,n,gamma"));

    std::fs::write(
        &cfg,
        r#"{"variant":"theorem1","model":"m.json","gamma":0.25,"eta":1e-12,"n_grid":[50],"trials":5}"#,
    )
    .unwrap();
    let mut csv = ptr::null_mut();
    assert_eq!(unsafe { typlab_run_sweep(path.as_ptr(), 1, &mut csv) }, TyplabStatus::Flagged);
    assert!(!csv.is_null());
    unsafe { typlab_string_free(csv) };

    let nowhere = CString::new(dir.path().join("absent.json").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { typlab_run_sweep(nowhere.as_ptr(), 1, &mut csv) }, TyplabStatus::IoError);
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/typlab.h")).unwrap();
    for name in [
        "typlab_last_error",
        "typlab_version",
        "typlab_model_from_json",
        "typlab_model_free",
        "typlab_model_log_moment_bound",
        "typlab_model_entropy",
        "typlab_type_from_sequences",
        "typlab_type_free",
        "typlab_score",
        "typlab_is_typical",
        "typlab_report_json",
        "typlab_string_free",
        "typlab_entropy",
        "typlab_kl_divergence",
        "typlab_variational_distance",
        "typlab_run_sweep",
        "typedef struct TyplabModel TyplabModel",
        "TYPLAB_STATUS_FLAGGED = 1",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(typlab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
