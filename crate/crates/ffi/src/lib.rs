//! C ABI over the smartfill library.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `sf_*_free` function. Every fallible call returns an [`SfStatus`]
//! and writes results through out-pointers; on failure,
//! [`sf_last_error_message`] returns a thread-local description of what went
//! wrong, valid until the next failing call on the same thread.
//!
//! The header `include/smartfill.h` is generated from this file at build
//! time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use smartfill::baselines::{equal_split, fit_power, hesrpt_approx, hesrpt_power};
use smartfill::instance::parse_instance_str;
use smartfill::scheduler::{smartfill as solve_smartfill, Job, ProblemInstance, ScheduleResult};
use smartfill::speedup::{SpeedupFunction, SpeedupSpec};

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let message = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).unwrap_or_default();
    });
}

/// Outcome of a C API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A JSON document could not be parsed.
    ParseError = 3,
    /// Input was well-formed but semantically invalid.
    InvalidInput = 4,
    /// The solver or a numeric routine failed.
    SolveFailed = 5,
    /// An index or buffer length did not match.
    OutOfRange = 6,
    /// The requested data is not carried by this schedule.
    Unavailable = 7,
    /// A panic was caught at the boundary.
    Internal = 8,
}

/// Scheduling policy selector for [`sf_solve`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfPolicy {
    Smartfill = 0,
    Hesrpt = 1,
    EqualSplit = 2,
}

/// Opaque speedup function handle.
pub struct SfSpeedup {
    inner: SpeedupFunction,
}

/// Opaque problem instance handle.
pub struct SfInstance {
    inner: ProblemInstance,
}

/// Opaque solved schedule handle.
pub struct SfSchedule {
    inner: ScheduleResult,
}

fn guard<F: FnOnce() -> SfStatus>(body: F) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            SfStatus::Internal
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, SfStatus> {
    if ptr.is_null() {
        set_error("null string argument");
        return Err(SfStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string argument is not valid UTF-8");
        SfStatus::InvalidUtf8
    })
}

/// Message for the most recent failure on this thread. Never null; empty
/// before any failure.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Builds a speedup function from its JSON description (for example
/// `{"family":"log","a":1.0,"p":1.0}`) on the domain `[0, bandwidth]`.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_speedup_from_json(
    json: *const c_char,
    bandwidth: f64,
    out: *mut *mut SfSpeedup,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return SfStatus::NullPointer;
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let spec: SpeedupSpec = match serde_json_from_str(text) {
            Ok(s) => s,
            Err(message) => {
                set_error(message);
                return SfStatus::ParseError;
            }
        };
        match spec.into_function(bandwidth) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SfSpeedup { inner }));
                SfStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                SfStatus::InvalidInput
            }
        }
    })
}

// serde_json is consumed through the core crate's re-exported types; parsing
// goes through a helper so this crate does not depend on serde_json itself.
fn serde_json_from_str(text: &str) -> Result<SpeedupSpec, String> {
    smartfill::speedup::spec_from_json(text)
}

/// # Safety
/// `handle` must come from `sf_speedup_from_json` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sf_speedup_free(handle: *mut SfSpeedup) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Service rate `s(theta)`.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sf_speedup_evaluate(
    handle: *const SfSpeedup,
    theta: f64,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return SfStatus::NullPointer;
        }
        match (*handle).inner.evaluate(theta) {
            Ok(v) => {
                *out = v;
                SfStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                SfStatus::OutOfRange
            }
        }
    })
}

/// Marginal rate `s'(theta)`; may be infinite at zero.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sf_speedup_derivative(
    handle: *const SfSpeedup,
    theta: f64,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return SfStatus::NullPointer;
        }
        match (*handle).inner.derivative(theta) {
            Ok(v) => {
                *out = v;
                SfStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                SfStatus::OutOfRange
            }
        }
    })
}

/// Inverse marginal rate: the `theta` with `s'(theta) = y`.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sf_speedup_derivative_inverse(
    handle: *const SfSpeedup,
    y: f64,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return SfStatus::NullPointer;
        }
        match (*handle).inner.derivative_inverse(y) {
            Ok(v) => {
                *out = v;
                SfStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                SfStatus::OutOfRange
            }
        }
    })
}

/// Least-squares power fit `a·theta^p` of the function over its domain.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_fit_power(
    handle: *const SfSpeedup,
    a: *mut f64,
    p: *mut f64,
) -> SfStatus {
    guard(|| {
        if handle.is_null() || a.is_null() || p.is_null() {
            set_error("null pointer argument");
            return SfStatus::NullPointer;
        }
        match fit_power(&(*handle).inner) {
            Ok(fit) => {
                *a = fit.a;
                *p = fit.p;
                SfStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                SfStatus::SolveFailed
            }
        }
    })
}

/// Parses a full instance document (bandwidth, jobs, speedup, optional
/// label).
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn sf_instance_from_json(
    json: *const c_char,
    out: *mut *mut SfInstance,
) -> SfStatus {
    guard(|| {
        if out.is_null() {
            set_error("null output pointer");
            return SfStatus::NullPointer;
        }
        let text = match read_str(json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match parse_instance_str(text) {
            Ok(parsed) => {
                *out = Box::into_raw(Box::new(SfInstance {
                    inner: parsed.instance,
                }));
                SfStatus::Ok
            }
            Err(e) => {
                let status = match &e {
                    smartfill::instance::InstanceError::Parse(_) => SfStatus::ParseError,
                    _ => SfStatus::InvalidInput,
                };
                set_error(e.to_string());
                status
            }
        }
    })
}

/// Builds an instance from parallel size and weight arrays plus a speedup
/// description.
///
/// # Safety
/// `sizes` and `weights` must point to `count` readable doubles;
/// `speedup_json` must be a valid NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn sf_instance_new(
    bandwidth: f64,
    sizes: *const f64,
    weights: *const f64,
    count: usize,
    speedup_json: *const c_char,
    out: *mut *mut SfInstance,
) -> SfStatus {
    guard(|| {
        if sizes.is_null() || weights.is_null() || out.is_null() {
            set_error("null pointer argument");
            return SfStatus::NullPointer;
        }
        if count == 0 {
            set_error("instance needs at least one job");
            return SfStatus::InvalidInput;
        }
        let text = match read_str(speedup_json) {
            Ok(t) => t,
            Err(status) => return status,
        };
        let spec: SpeedupSpec = match serde_json_from_str(text) {
            Ok(s) => s,
            Err(message) => {
                set_error(message);
                return SfStatus::ParseError;
            }
        };
        let speedup = match spec.into_function(bandwidth) {
            Ok(f) => f,
            Err(e) => {
                set_error(e.to_string());
                return SfStatus::InvalidInput;
            }
        };
        let report = speedup.validate();
        if !report.is_valid() {
            set_error(format!("speedup axioms: {}", report.violations[0]));
            return SfStatus::InvalidInput;
        }
        let sizes = std::slice::from_raw_parts(sizes, count);
        let weights = std::slice::from_raw_parts(weights, count);
        let jobs = sizes
            .iter()
            .zip(weights)
            .map(|(&size, &weight)| Job { size, weight })
            .collect();
        match ProblemInstance::new(bandwidth, jobs, speedup) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SfInstance { inner }));
                SfStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                SfStatus::InvalidInput
            }
        }
    })
}

/// # Safety
/// `handle` must come from an `sf_instance_*` constructor and not be freed
/// twice.
#[no_mangle]
pub unsafe extern "C" fn sf_instance_free(handle: *mut SfInstance) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of jobs in the instance; zero for a null handle.
///
/// # Safety
/// `handle` must be a valid instance handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_instance_job_count(handle: *const SfInstance) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).inner.job_count()
}

/// Solves the instance under the selected policy.
///
/// # Safety
/// `instance` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sf_solve(
    instance: *const SfInstance,
    policy: SfPolicy,
    out: *mut *mut SfSchedule,
) -> SfStatus {
    guard(|| {
        if instance.is_null() || out.is_null() {
            set_error("null pointer argument");
            return SfStatus::NullPointer;
        }
        let inst = &(*instance).inner;
        let solved = match policy {
            SfPolicy::Smartfill => solve_smartfill(inst).map_err(|e| e.to_string()),
            SfPolicy::Hesrpt => {
                if inst.speedup().is_power() {
                    hesrpt_power(inst).map_err(|e| e.to_string())
                } else {
                    fit_power(inst.speedup())
                        .and_then(|fit| hesrpt_approx(inst, &fit))
                        .map_err(|e| e.to_string())
                }
            }
            SfPolicy::EqualSplit => equal_split(inst).map_err(|e| e.to_string()),
        };
        match solved {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(SfSchedule { inner }));
                SfStatus::Ok
            }
            Err(message) => {
                set_error(message);
                SfStatus::SolveFailed
            }
        }
    })
}

/// # Safety
/// `handle` must come from `sf_solve` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sf_schedule_free(handle: *mut SfSchedule) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of jobs covered by the schedule; zero for a null handle.
///
/// # Safety
/// `handle` must be a valid schedule handle or null.
#[no_mangle]
pub unsafe extern "C" fn sf_schedule_job_count(handle: *const SfSchedule) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).inner.completion_times.len()
}

/// Weighted sum of completion times.
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sf_schedule_objective(
    handle: *const SfSchedule,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return SfStatus::NullPointer;
        }
        *out = (*handle).inner.objective;
        SfStatus::Ok
    })
}

unsafe fn copy_slice(values: &[f64], buffer: *mut f64, len: usize) -> SfStatus {
    if buffer.is_null() {
        set_error("null buffer");
        return SfStatus::NullPointer;
    }
    if len != values.len() {
        set_error(format!(
            "buffer holds {len} values, schedule has {}",
            values.len()
        ));
        return SfStatus::OutOfRange;
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buffer, values.len());
    SfStatus::Ok
}

/// Copies per-job completion times into `buffer` (length must equal the job
/// count).
///
/// # Safety
/// `handle` must be valid; `buffer` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_schedule_completion_times(
    handle: *const SfSchedule,
    buffer: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        if handle.is_null() {
            set_error("null schedule handle");
            return SfStatus::NullPointer;
        }
        copy_slice(&(*handle).inner.completion_times, buffer, len)
    })
}

/// Copies per-interval durations into `buffer` (length must equal the job
/// count).
///
/// # Safety
/// `handle` must be valid; `buffer` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_schedule_durations(
    handle: *const SfSchedule,
    buffer: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        if handle.is_null() {
            set_error("null schedule handle");
            return SfStatus::NullPointer;
        }
        copy_slice(&(*handle).inner.durations, buffer, len)
    })
}

/// Allocation rate of job `i` during interval `j` (zero-based).
///
/// # Safety
/// `handle` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sf_schedule_allocation(
    handle: *const SfSchedule,
    i: usize,
    j: usize,
    out: *mut f64,
) -> SfStatus {
    guard(|| {
        if handle.is_null() || out.is_null() {
            set_error("null pointer argument");
            return SfStatus::NullPointer;
        }
        let matrix = &(*handle).inner.matrix;
        let m = matrix.job_count();
        if i >= m || j >= m {
            set_error(format!("index ({i}, {j}) outside a {m}x{m} schedule"));
            return SfStatus::OutOfRange;
        }
        *out = matrix.get(i, j);
        SfStatus::Ok
    })
}

/// Copies the per-job objective coefficients; `SF_UNAVAILABLE` for schedules
/// that do not carry them (benchmark policies).
///
/// # Safety
/// `handle` must be valid; `buffer` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_schedule_coefficients(
    handle: *const SfSchedule,
    buffer: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        if handle.is_null() {
            set_error("null schedule handle");
            return SfStatus::NullPointer;
        }
        match &(*handle).inner.coefficients {
            Some(values) => copy_slice(values, buffer, len),
            None => {
                set_error("schedule carries no objective coefficients");
                SfStatus::Unavailable
            }
        }
    })
}

/// Copies the per-job marginal-rate ratio constants; `SF_UNAVAILABLE` when
/// absent.
///
/// # Safety
/// `handle` must be valid; `buffer` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sf_schedule_cdr_constants(
    handle: *const SfSchedule,
    buffer: *mut f64,
    len: usize,
) -> SfStatus {
    guard(|| {
        if handle.is_null() {
            set_error("null schedule handle");
            return SfStatus::NullPointer;
        }
        match &(*handle).inner.cdr_constants {
            Some(values) => copy_slice(values, buffer, len),
            None => {
                set_error("schedule carries no ratio constants");
                SfStatus::Unavailable
            }
        }
    })
}
