//! C ABI over `ris_sumrate`.
//!
//! Objects cross the boundary as opaque pointers created by `*_new`/`*_load`
//! style functions and released with the matching `*_free`. Every fallible
//! call returns an [`RsStatus`]; on failure the message is kept per thread
//! and read with [`rs_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ris_sumrate::em::{dipole_mutual_impedance, DipoleGeometry};
use ris_sumrate::harness::{run_convergence, write_outputs, ExperimentResult};
use ris_sumrate::optimizer::CouplingMode;
use ris_sumrate::scenario::{load_scenario, Scenario};
use ris_sumrate::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    Io = 4,
    Numerical = 5,
    Panic = 6,
}

/// Which designs a run covers.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsMode {
    Mca = 0,
    Mcu = 1,
    Both = 2,
}

/// Thin-wire dipole: center and unit axis in meters, full length, radius.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RsDipole {
    pub center: [f64; 3],
    pub axis: [f64; 3],
    pub length: f64,
    pub radius: f64,
}

/// Opaque scenario handle.
pub struct RsScenario(Scenario);

/// Opaque experiment result handle.
pub struct RsResult(ExperimentResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(err: &Error) -> RsStatus {
    match err {
        Error::Io(_) => RsStatus::Io,
        e if e.is_validation() => RsStatus::InvalidInput,
        _ => RsStatus::Numerical,
    }
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<(), (RsStatus, String)>) -> RsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside ris-sumrate");
            RsStatus::Panic
        }
    }
}

fn lib<T>(r: ris_sumrate::Result<T>) -> Result<T, (RsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, (RsStatus, String)> {
    if p.is_null() {
        return Err((RsStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (RsStatus::InvalidUtf8, "argument is not valid UTF-8".into()))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (RsStatus, String)> {
    p.as_ref().ok_or_else(|| (RsStatus::NullPointer, format!("null {what} handle")))
}

fn out_ptr<T>(p: *mut T) -> Result<(), (RsStatus, String)> {
    if p.is_null() {
        Err((RsStatus::NullPointer, "null output pointer".into()))
    } else {
        Ok(())
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_scenario_from_json(json: *const c_char, out: *mut *mut RsScenario) -> RsStatus {
    guard(|| {
        out_ptr(out)?;
        let s = lib(Scenario::from_json(text(json)?))?;
        lib(s.validate())?;
        *out = Box::into_raw(Box::new(RsScenario(s)));
        Ok(())
    })
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_scenario_load(path: *const c_char, out: *mut *mut RsScenario) -> RsStatus {
    guard(|| {
        out_ptr(out)?;
        let s = lib(load_scenario(Path::new(text(path)?)))?;
        *out = Box::into_raw(Box::new(RsScenario(s)));
        Ok(())
    })
}

/// Overrides the iteration count of a scenario.
///
/// # Safety
/// `scenario` must come from this library and not be freed.
#[no_mangle]
pub unsafe extern "C" fn rs_scenario_set_iterations(scenario: *mut RsScenario, iterations: usize) -> RsStatus {
    guard(|| {
        let s = scenario
            .as_mut()
            .ok_or_else(|| (RsStatus::NullPointer, "null scenario handle".to_string()))?;
        s.0.iterations = iterations;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or come from this library; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rs_scenario_free(scenario: *mut RsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Runs the convergence experiment for `mode`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_run_convergence(scenario: *const RsScenario, mode: RsMode, out: *mut *mut RsResult) -> RsStatus {
    guard(|| {
        out_ptr(out)?;
        let s = handle(scenario, "scenario")?;
        let modes = match mode {
            RsMode::Mca => vec![CouplingMode::Mca],
            RsMode::Mcu => vec![CouplingMode::Mcu],
            RsMode::Both => vec![CouplingMode::Mca, CouplingMode::Mcu],
        };
        let r = lib(run_convergence(&s.0, &modes))?;
        *out = Box::into_raw(Box::new(RsResult(r)));
        Ok(())
    })
}

/// Number of trace rows (all modes together).
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_result_trace_len(result: *const RsResult, out: *mut usize) -> RsStatus {
    guard(|| {
        out_ptr(out)?;
        *out = handle(result, "result")?.0.trace.len();
        Ok(())
    })
}

/// Last reported sum-rate (bits) of `mode`, which must be `Mca` or `Mcu`.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rs_result_final_sum_rate(result: *const RsResult, mode: RsMode, out: *mut f64) -> RsStatus {
    guard(|| {
        out_ptr(out)?;
        let want = match mode {
            RsMode::Mca => CouplingMode::Mca,
            RsMode::Mcu => CouplingMode::Mcu,
            RsMode::Both => return Err((RsStatus::InvalidInput, "pick a single mode".into())),
        };
        let r = handle(result, "result")?;
        let row = r.0.trace.iter().rev().find(|t| t.mode == want).ok_or_else(|| {
            (RsStatus::InvalidInput, format!("no {} trace in this result", want.as_str()))
        })?;
        *out = row.record.sum_rate_bits;
        Ok(())
    })
}

/// Writes the CSV files and `metadata.json` into `dir`.
///
/// # Safety
/// `result` must be a live handle; `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rs_result_write(result: *const RsResult, dir: *const c_char) -> RsStatus {
    guard(|| {
        let r = handle(result, "result")?;
        lib(write_outputs(&r.0, Path::new(text(dir)?)))
    })
}

/// # Safety
/// `result` must be null or come from this library; it must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rs_result_free(result: *mut RsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Mutual impedance in ohms between two dipoles.
///
/// # Safety
/// All pointers must be valid; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn rs_mutual_impedance(
    a: *const RsDipole,
    b: *const RsDipole,
    wavelength: f64,
    re: *mut f64,
    im: *mut f64,
) -> RsStatus {
    guard(|| {
        out_ptr(re)?;
        out_ptr(im)?;
        let geom = |d: &RsDipole| {
            lib(DipoleGeometry::new(d.center.into(), d.length, d.radius, d.axis.into()))
        };
        let da = geom(handle(a, "dipole")?)?;
        let db = geom(handle(b, "dipole")?)?;
        let z = lib(dipole_mutual_impedance(&da, &db, wavelength))?;
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}
