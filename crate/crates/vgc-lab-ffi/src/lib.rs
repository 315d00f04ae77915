//! C ABI for the experiment engine: opaque handles, integer status codes,
//! and caller-freed strings. The header is generated by cbindgen into
//! `include/vgc_lab.h` at build time.
//!
//! Conventions:
//! - Functions return `VgcLabStatus`; anything but `Ok` leaves outputs
//!   untouched and records a message readable via `vgc_lab_last_error`
//!   (valid on the calling thread until the next call).
//! - Strings returned through out-pointers are owned by the caller and must
//!   be released with `vgc_lab_string_free`.

use std::cell::RefCell;
use std::ffi::{CStr, CString, c_char};

use vgc_lab::cli::{self, Overrides, RunConfig};
use vgc_lab::experiments::run_replications;

/// Status codes mirroring the CLI exit contract.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VgcLabStatus {
    Ok = 0,
    ConfigError = 2,
    RuntimeError = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
}

/// Opaque handle over a parsed experiment configuration.
pub struct VgcLabExperiment {
    config: RunConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(sanitized).unwrap());
}

/// Message of the most recent failure on this thread. Never null; empty when
/// no failure happened. Valid until the next call into this library.
#[unsafe(no_mangle)]
pub extern "C" fn vgc_lab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string; do not free.
#[unsafe(no_mangle)]
pub extern "C" fn vgc_lab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Parse a JSON experiment configuration. On success `*out` owns the handle;
/// release it with `vgc_lab_experiment_free`.
///
/// # Safety
/// `json` must point to a NUL-terminated string and `out` must be a valid
/// pointer to writable memory.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vgc_lab_experiment_from_json(
    json: *const c_char,
    out: *mut *mut VgcLabExperiment,
) -> VgcLabStatus {
    if json.is_null() || out.is_null() {
        set_error("null pointer argument");
        return VgcLabStatus::NullPointer;
    }
    let text = match unsafe { CStr::from_ptr(json) }.to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config is not valid UTF-8");
            return VgcLabStatus::InvalidUtf8;
        }
    };
    match cli::config_from_str(text) {
        Ok(config) => {
            unsafe { *out = Box::into_raw(Box::new(VgcLabExperiment { config })) };
            VgcLabStatus::Ok
        }
        Err(e) => {
            set_error(&e.to_string());
            VgcLabStatus::ConfigError
        }
    }
}

/// Release an experiment handle. Null is accepted.
///
/// # Safety
/// `handle` must be null or a pointer previously returned by
/// `vgc_lab_experiment_from_json` that has not been freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vgc_lab_experiment_free(handle: *mut VgcLabExperiment) {
    if !handle.is_null() {
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Run the experiment with the given master seed and worker count
/// (0 = all cores) and return the result table as a CSV string.
///
/// # Safety
/// `handle` must be a live handle from `vgc_lab_experiment_from_json` and
/// `out_csv` a valid pointer to writable memory.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vgc_lab_run_csv(
    handle: *const VgcLabExperiment,
    seed: u64,
    workers: usize,
    out_csv: *mut *mut c_char,
) -> VgcLabStatus {
    if handle.is_null() || out_csv.is_null() {
        set_error("null pointer argument");
        return VgcLabStatus::NullPointer;
    }
    let experiment = unsafe { &*handle };
    let overrides = Overrides {
        seed: Some(seed),
        workers: Some(workers),
        out: None,
    };
    let scenario = match cli::build_scenario(&experiment.config, &overrides) {
        Ok(s) => s,
        Err(e) => {
            set_error(&e.to_string());
            return VgcLabStatus::ConfigError;
        }
    };
    match run_replications(&scenario, workers) {
        Ok(stats) => {
            let csv = cli::render_csv(&[(None, &stats)]);
            let c = CString::new(csv).expect("csv has no interior NUL");
            unsafe { *out_csv = c.into_raw() };
            VgcLabStatus::Ok
        }
        Err(e) => match cli::CliError::from(e) {
            err @ cli::CliError::Config(_) => {
                set_error(&err.to_string());
                VgcLabStatus::ConfigError
            }
            err @ cli::CliError::Runtime(_) => {
                set_error(&err.to_string());
                VgcLabStatus::RuntimeError
            }
        },
    }
}

/// Run the fast invariant suite; `*out_report` receives the rendered report.
/// Returns `Ok` when every property holds.
///
/// # Safety
/// `out_report` must be null or a valid pointer to writable memory.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vgc_lab_check(
    seed: u64,
    cases: usize,
    out_report: *mut *mut c_char,
) -> VgcLabStatus {
    let report = cli::cmd_check(seed, cases);
    if !out_report.is_null() {
        let c = CString::new(report.render()).expect("report has no interior NUL");
        unsafe { *out_report = c.into_raw() };
    }
    if report.passed() {
        VgcLabStatus::Ok
    } else {
        set_error("invariant checks failed");
        VgcLabStatus::RuntimeError
    }
}

/// Free a string returned by this library. Null is accepted.
///
/// # Safety
/// `s` must be null or a pointer previously returned through an out-string
/// parameter of this library that has not been freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn vgc_lab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}
