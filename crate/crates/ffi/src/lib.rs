//! C ABI for `typlab`.
//!
//! Every fallible function returns a [`TyplabStatus`] and writes its result
//! through an out-pointer. On failure a message is available from
//! [`typlab_last_error`] until the next call on the same thread. Handles are
//! opaque and must be released with their `_free` function; strings returned
//! by the library are released with [`typlab_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use typlab::empirical::{EmpiricalType, SequenceTriple};
use typlab::experiments::{self, shortcut_csv, sweep_csv_bytes, ExperimentConfig, Outcome};
use typlab::measures;
use typlab::model::{parse_triple, MarkovTriple};
use typlab::typicality::{is_typical, Variant};
use typlab::{Error, Vars};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TyplabStatus {
    Ok = 0,
    /// The sweep ran but some grid point accepted no trial.
    Flagged = 1,
    NullPointer = 2,
    InvalidUtf8 = 3,
    InvalidArgument = 4,
    InvalidModel = 5,
    ParseError = 6,
    IoError = 7,
    Panic = 8,
}

/// A validated Markov triple `p(x|y) p(yz)`.
pub struct TyplabModel(MarkovTriple);

/// The joint type of three aligned sequences.
pub struct TyplabType(EmpiricalType);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(TyplabStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Json(_) | Error::Csv(_) | Error::Field { .. } => TyplabStatus::ParseError,
            Error::Io { .. } => TyplabStatus::IoError,
            Error::InvalidPmf(_)
            | Error::Truncation { .. }
            | Error::BoundViolation { .. }
            | Error::MissingKernelRow(_) => TyplabStatus::InvalidModel,
            _ => TyplabStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: TyplabStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<TyplabStatus, Failure>) -> TyplabStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            TyplabStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(TyplabStatus::NullPointer, format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TyplabStatus::InvalidUtf8, format!("`{name}` is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| fail(TyplabStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(TyplabStatus::NullPointer, format!("`{name}` is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(TyplabStatus::NullPointer, format!("`{name}` is null")));
    }
    out.write(value);
    Ok(())
}

fn variant_arg(name: &str) -> Result<Variant, Failure> {
    name.parse::<Variant>()
        .map_err(|_| fail(TyplabStatus::InvalidArgument, format!("unknown variant `{name}`")))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(TyplabStatus::InvalidArgument, "output contains a NUL byte"))
}

/// Message for the last failed call on this thread, or null. Owned by the
/// library; valid until the next `typlab_*` call on the same thread.
#[no_mangle]
pub extern "C" fn typlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn typlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a triple from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_model_from_json(json: *const c_char, out: *mut *mut TyplabModel) -> TyplabStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let model = parse_triple(json)?;
        write_out(out, Box::into_raw(Box::new(TyplabModel(model))), "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// # Safety
/// `model` must come from [`typlab_model_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn typlab_model_free(model: *mut TyplabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// The certified bound `C` on the kernel's second log-moment, in bits^2.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_model_log_moment_bound(model: *const TyplabModel, out: *mut f64) -> TyplabStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        write_out(out, m.0.log_moment_bound(), "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// Entropy of the model's marginal on `vars` (e.g. `"XZ"`), in bits.
///
/// # Safety
/// `model` must be a live handle, `vars` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_model_entropy(
    model: *const TyplabModel,
    vars: *const c_char,
    out: *mut f64,
) -> TyplabStatus {
    guard(|| {
        let m = ref_arg(model, "model")?;
        let label = str_arg(vars, "vars")?;
        let v = Vars::parse(label)
            .ok_or_else(|| fail(TyplabStatus::InvalidArgument, format!("unknown variable set `{label}`")))?;
        write_out(out, m.0.entropy(v), "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// Joint type of three aligned sequences of length `n`.
///
/// # Safety
/// `x`, `y`, `z` must each point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_type_from_sequences(
    x: *const u64,
    y: *const u64,
    z: *const u64,
    n: usize,
    out: *mut *mut TyplabType,
) -> TyplabStatus {
    guard(|| {
        let seqs = SequenceTriple::new(
            slice_arg(x, n, "x")?.to_vec(),
            slice_arg(y, n, "y")?.to_vec(),
            slice_arg(z, n, "z")?.to_vec(),
        )?;
        let q = TyplabType(EmpiricalType::from_sequences(&seqs));
        write_out(out, Box::into_raw(Box::new(q)), "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// # Safety
/// `q` must come from [`typlab_type_from_sequences`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn typlab_type_free(q: *mut TyplabType) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Score of `q` against `model` under `variant` (`unified3`, `unified2`,
/// `unified1`, `two_term` or `weak`). May be `+inf`.
///
/// # Safety
/// Handles must be live, `variant` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_score(
    q: *const TyplabType,
    model: *const TyplabModel,
    variant: *const c_char,
    out: *mut f64,
) -> TyplabStatus {
    guard(|| {
        let q = ref_arg(q, "q")?;
        let m = ref_arg(model, "model")?;
        let v = variant_arg(str_arg(variant, "variant")?)?;
        write_out(out, is_typical(&q.0, &m.0, f64::INFINITY, v).total, "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// Membership of `q` in the typical set at `threshold`.
///
/// # Safety
/// Handles must be live, `variant` NUL-terminated, `member` writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_is_typical(
    q: *const TyplabType,
    model: *const TyplabModel,
    threshold: f64,
    variant: *const c_char,
    member: *mut bool,
) -> TyplabStatus {
    guard(|| {
        let q = ref_arg(q, "q")?;
        let m = ref_arg(model, "model")?;
        let v = variant_arg(str_arg(variant, "variant")?)?;
        if threshold.is_nan() || threshold < 0.0 {
            return Err(fail(TyplabStatus::InvalidArgument, "`threshold` must be nonnegative"));
        }
        let report = is_typical(&q.0, &m.0, threshold, v);
        write_out(member, report.member == Some(true), "member")?;
        Ok(TyplabStatus::Ok)
    })
}

/// Full report as JSON; free the string with [`typlab_string_free`].
///
/// # Safety
/// Handles must be live, `variant` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_report_json(
    q: *const TyplabType,
    model: *const TyplabModel,
    threshold: f64,
    variant: *const c_char,
    out: *mut *mut c_char,
) -> TyplabStatus {
    guard(|| {
        let q = ref_arg(q, "q")?;
        let m = ref_arg(model, "model")?;
        let v = variant_arg(str_arg(variant, "variant")?)?;
        let report = is_typical(&q.0, &m.0, threshold, v);
        write_out(out, into_c_string(report.to_json().to_string())?, "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// # Safety
/// `s` must be a string returned by this library, or null.
#[no_mangle]
pub unsafe extern "C" fn typlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

fn check_probs(p: &[f64], name: &str) -> Result<(), Failure> {
    if p.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(fail(TyplabStatus::InvalidArgument, format!("`{name}` has a negative or non-finite entry")));
    }
    Ok(())
}

/// Entropy in bits of a probability vector.
///
/// # Safety
/// `p` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_entropy(p: *const f64, len: usize, out: *mut f64) -> TyplabStatus {
    guard(|| {
        let p = slice_arg(p, len, "p")?;
        check_probs(p, "p")?;
        write_out(out, measures::entropy(p.iter().copied()), "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// `D(q || p)` in bits over aligned vectors; `+inf` off support.
///
/// # Safety
/// `q` and `p` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_kl_divergence(q: *const f64, p: *const f64, len: usize, out: *mut f64) -> TyplabStatus {
    guard(|| {
        let q = slice_arg(q, len, "q")?;
        let p = slice_arg(p, len, "p")?;
        check_probs(q, "q")?;
        check_probs(p, "p")?;
        write_out(out, measures::kl_divergence_dense(q, p), "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// `sum |q - p|` over aligned vectors.
///
/// # Safety
/// `q` and `p` must point to `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_variational_distance(
    q: *const f64,
    p: *const f64,
    len: usize,
    out: *mut f64,
) -> TyplabStatus {
    guard(|| {
        let q = slice_arg(q, len, "q")?;
        let p = slice_arg(p, len, "p")?;
        check_probs(q, "q")?;
        check_probs(p, "p")?;
        write_out(out, measures::variational_distance_dense(q, p), "out")?;
        Ok(TyplabStatus::Ok)
    })
}

/// Run the experiment described by the JSON configuration file at `path`
/// and return its CSV. `workers == 0` means one worker; results do not
/// depend on it. Returns [`TyplabStatus::Flagged`] (with the CSV written)
/// when a grid point accepted no trial.
///
/// # Safety
/// `path` must be NUL-terminated; `csv_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn typlab_run_sweep(path: *const c_char, workers: u32, csv_out: *mut *mut c_char) -> TyplabStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let cfg = ExperimentConfig::load(path)?.with_workers(workers as usize);
        let (bytes, flagged) = match experiments::run(&cfg)? {
            Outcome::Sweep(r) => (sweep_csv_bytes(&r)?, r.flagged()),
            Outcome::Shortcut(rows) => (shortcut_csv(&rows)?, false),
            Outcome::Semicontinuity(t) => (t.to_csv()?, false),
        };
        let text = String::from_utf8(bytes).map_err(|_| fail(TyplabStatus::InvalidUtf8, "CSV is not UTF-8"))?;
        write_out(csv_out, into_c_string(text)?, "csv_out")?;
        Ok(if flagged { TyplabStatus::Flagged } else { TyplabStatus::Ok })
    })
}
