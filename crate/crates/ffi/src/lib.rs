//! C interface to the simulator.
//!
//! Every fallible function returns an [`SqStatus`]. On failure a message is
//! kept per thread and can be read with [`sq_last_error`]. Configs are
//! opaque handles released with [`sq_config_free`]; strings returned through
//! out-parameters are released with [`sq_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use spinqudit::config::{ExperimentConfig, ExperimentKind};
use spinqudit::dynamics::Backend;
use spinqudit::Error;

/// Result codes; 2-4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqStatus {
    Ok = 0,
    Io = 1,
    /// Malformed input: bad JSON, unknown preset, out-of-range values.
    Invalid = 2,
    /// A physics check failed (labeling, factorization, RWA, time step).
    Physics = 3,
    Scheduling = 4,
    NullArgument = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqBackend {
    Lab = 0,
    Rwa = 1,
    Ideal = 2,
}

impl From<SqBackend> for Backend {
    fn from(b: SqBackend) -> Self {
        match b {
            SqBackend::Lab => Backend::Lab,
            SqBackend::Rwa => Backend::Rwa,
            SqBackend::Ideal => Backend::Ideal,
        }
    }
}

/// Opaque experiment configuration.
pub struct SqConfig {
    inner: ExperimentConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

enum Fail {
    Lib(Error),
    Null(&'static str),
    Invalid(String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SqStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => return SqStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            let status = match e.exit_code() {
                2 => SqStatus::Invalid,
                3 => SqStatus::Physics,
                4 => SqStatus::Scheduling,
                _ => SqStatus::Io,
            };
            (status, e.to_string())
        }
        Ok(Err(Fail::Null(what))) => (SqStatus::NullArgument, format!("{what} is null")),
        Ok(Err(Fail::Invalid(m))) => (SqStatus::Invalid, m),
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            (SqStatus::Panic, format!("internal panic: {m}"))
        }
    };
    set_error(&msg);
    status
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail::Invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn config<'a>(cfg: *mut SqConfig) -> Result<&'a mut ExperimentConfig, Fail> {
    cfg.as_mut().map(|c| &mut c.inner).ok_or(Fail::Null("config"))
}

unsafe fn slice<'a>(p: *const f64, n: usize, what: &'static str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("output pointer"));
    }
    let c = CString::new(s).map_err(|_| Fail::Invalid("string contains NUL".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn put_config(out: *mut *mut SqConfig, inner: ExperimentConfig) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("output pointer"));
    }
    *out = Box::into_raw(Box::new(SqConfig { inner }));
    Ok(())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn sq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread; valid until the next failure.
#[no_mangle]
pub extern "C" fn sq_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Preset names and notes, one per line.
///
/// # Safety
/// `out` must be a valid pointer to write a string pointer into.
#[no_mangle]
pub unsafe extern "C" fn sq_list_presets(out: *mut *mut c_char) -> SqStatus {
    guard(|| put_string(out, spinqudit::cli::list_presets()))
}

/// Builds a config for experiment `kind` (e.g. "dqs") from a shipped preset.
///
/// # Safety
/// `kind` and `preset` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_config_from_preset(
    kind: *const c_char,
    preset: *const c_char,
    out: *mut *mut SqConfig,
) -> SqStatus {
    guard(|| {
        let kind: ExperimentKind = text(kind, "kind")?.parse()?;
        let preset = spinqudit::presets::get(text(preset, "preset")?)?;
        put_config(out, ExperimentConfig::from_preset(kind, &preset))
    })
}

/// Parses and validates a JSON config document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_config_from_json(json: *const c_char, out: *mut *mut SqConfig) -> SqStatus {
    guard(|| put_config(out, ExperimentConfig::from_json(text(json, "json")?)?))
}

/// Pretty JSON form of the config.
///
/// # Safety
/// `cfg` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_config_to_json(cfg: *mut SqConfig, out: *mut *mut c_char) -> SqStatus {
    guard(|| put_string(out, config(cfg)?.to_json()))
}

/// Hex SHA-256 of the config.
///
/// # Safety
/// `cfg` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sq_config_hash(cfg: *mut SqConfig, out: *mut *mut c_char) -> SqStatus {
    guard(|| put_string(out, config(cfg)?.hash()))
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sq_config_set_backend(cfg: *mut SqConfig, backend: SqBackend) -> SqStatus {
    guard(|| {
        config(cfg)?.backend = backend.into();
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn sq_config_set_seed(cfg: *mut SqConfig, seed: u64) -> SqStatus {
    guard(|| {
        config(cfg)?.seed = seed;
        Ok(())
    })
}

/// Coherence times in µs; `INFINITY` means no dephasing.
///
/// # Safety
/// `cfg` must come from this library; `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sq_config_set_t2(cfg: *mut SqConfig, values: *const f64, n: usize) -> SqStatus {
    guard(|| {
        let v = slice(values, n, "values")?;
        if v.is_empty() || v.iter().any(|t| !(*t > 0.0)) {
            return Err(Fail::Invalid("T2 values must be positive (INFINITY for none)".into()));
        }
        config(cfg)?.t2_us = v.iter().map(|&t| t.is_finite().then_some(t)).collect();
        Ok(())
    })
}

/// Simulated times, units of 1/Omega.
///
/// # Safety
/// `cfg` must come from this library; `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sq_config_set_times(cfg: *mut SqConfig, values: *const f64, n: usize) -> SqStatus {
    guard(|| {
        let v = slice(values, n, "values")?.to_vec();
        let c = config(cfg)?;
        let old = std::mem::replace(&mut c.times, v);
        c.validate().inspect_err(|_| c.times = old).map_err(Fail::from)
    })
}

/// Coupling sweep for ground-state searches.
///
/// # Safety
/// `cfg` must come from this library; `values` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sq_config_set_g_grid(cfg: *mut SqConfig, values: *const f64, n: usize) -> SqStatus {
    guard(|| {
        let v = slice(values, n, "values")?.to_vec();
        let c = config(cfg)?;
        let old = std::mem::replace(&mut c.g_grid, v);
        c.validate().inspect_err(|_| c.g_grid = old).map_err(Fail::from)
    })
}

/// Runs the experiment, writing its files into `out_dir`. When `summary` is
/// non-null it receives the JSON summary.
///
/// # Safety
/// `cfg` must come from this library; `out_dir` must be a NUL-terminated
/// string; `summary` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn sq_run(cfg: *mut SqConfig, out_dir: *const c_char, summary: *mut *mut c_char) -> SqStatus {
    guard(|| {
        let dir = text(out_dir, "out_dir")?;
        let s = spinqudit::cli::run(config(cfg)?, Path::new(dir))?;
        if !summary.is_null() {
            put_string(summary, s.to_string())?;
        }
        Ok(())
    })
}

/// # Safety
/// `cfg` must be null or come from this library, and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sq_config_free(cfg: *mut SqConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn sq_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
