//! C ABI over the msplace solvers.
//!
//! Scenarios and results cross the boundary as opaque handles; everything
//! else is JSON text in the same formats the `msplace` CLI reads and writes.
//! Every function returns an [`MsplaceStatus`]; on failure a description is
//! kept per thread and can be fetched with [`msplace_last_error`].
//!
//! Strings returned by this library are owned by the caller and must be
//! released with [`msplace_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use msplace::exact::{solve_exact, SolveStatus};
use msplace::mm::map_all;
use msplace::scenario::{AssignmentFile, Scenario};
use msplace::{check_constraints, Assignment, Error, Violation};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsplaceStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Input text could not be parsed or violates the scenario schema.
    Malformed = 3,
    /// The solver found no feasible placement.
    NoSolution = 4,
    /// A parameter was out of range.
    Config = 5,
    /// The library panicked; the handle arguments are unchanged.
    Internal = 6,
}

/// A parsed scenario: farm, procedures and workload.
pub struct MsplaceScenario {
    scenario: Scenario,
}

/// A solved placement with its cost and per-link flows.
pub struct MsplaceResult {
    file: AssignmentFile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = CString::new(message.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn fail(status: MsplaceStatus, message: impl Into<String>) -> MsplaceStatus {
    set_error(message);
    status
}

fn from_error(e: Error) -> MsplaceStatus {
    let status = match e {
        Error::Config(_) => MsplaceStatus::Config,
        _ => MsplaceStatus::Malformed,
    };
    fail(status, e.to_string())
}

/// Runs `body`, turning a panic into [`MsplaceStatus::Internal`].
fn guard(body: impl FnOnce() -> MsplaceStatus) -> MsplaceStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|payload| {
        let message = payload
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| payload.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".to_owned());
        fail(MsplaceStatus::Internal, message)
    })
}

unsafe fn read_str<'a>(text: *const c_char) -> Result<&'a str, MsplaceStatus> {
    if text.is_null() {
        return Err(fail(MsplaceStatus::NullArgument, "null string argument"));
    }
    // SAFETY: the caller passes a NUL-terminated string that outlives the call.
    unsafe { CStr::from_ptr(text) }
        .to_str()
        .map_err(|e| fail(MsplaceStatus::InvalidUtf8, e.to_string()))
}

fn into_raw(text: String) -> *mut c_char {
    CString::new(text).map_or(ptr::null_mut(), CString::into_raw)
}

macro_rules! try_status {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(MsplaceStatus::NullArgument, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer. On
/// success `*out` receives a handle to release with
/// [`msplace_scenario_free`].
#[no_mangle]
pub unsafe extern "C" fn msplace_scenario_from_json(
    json: *const c_char,
    out: *mut *mut MsplaceScenario,
) -> MsplaceStatus {
    guard(|| {
        non_null!(out);
        // SAFETY: forwarded from the caller's contract.
        let text = try_status!(unsafe { read_str(json) });
        let scenario = try_status!(Scenario::from_json(text).map_err(from_error));
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { *out = Box::into_raw(Box::new(MsplaceScenario { scenario })) };
        MsplaceStatus::Ok
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scenario` must come from [`msplace_scenario_from_json`] and not have been
/// released already.
#[no_mangle]
pub unsafe extern "C" fn msplace_scenario_free(scenario: *mut MsplaceScenario) {
    if !scenario.is_null() {
        // SAFETY: the pointer was produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

fn finish(scenario: &Scenario, assignment: &Assignment, out: *mut *mut MsplaceResult) -> MsplaceStatus {
    let file = try_status!(AssignmentFile::build(scenario, assignment).map_err(from_error));
    // SAFETY: callers check `out` before solving.
    unsafe { *out = Box::into_raw(Box::new(MsplaceResult { file })) };
    MsplaceStatus::Ok
}

/// Places every procedure of the scenario with the mapping heuristic.
///
/// # Safety
/// `scenario` must be a live handle and `out` a writable pointer. On success
/// `*out` receives a handle to release with [`msplace_result_free`].
#[no_mangle]
pub unsafe extern "C" fn msplace_solve_mm(
    scenario: *const MsplaceScenario,
    out: *mut *mut MsplaceResult,
) -> MsplaceStatus {
    guard(|| {
        non_null!(scenario, out);
        // SAFETY: `scenario` is a live handle per the contract.
        let s = unsafe { &(*scenario).scenario };
        let plan = try_status!(s.plan().map_err(from_error));
        match map_all(&s.infra, &s.procedures, &plan, None) {
            Ok(assignment) => finish(s, &assignment, out),
            Err(e) => fail(MsplaceStatus::NoSolution, e.to_string()),
        }
    })
}

/// Solves the scenario to optimality with branch-and-bound. When the time
/// limit expires with an incumbent, the incumbent is returned.
///
/// # Safety
/// Same contract as [`msplace_solve_mm`].
#[no_mangle]
pub unsafe extern "C" fn msplace_solve_exact(
    scenario: *const MsplaceScenario,
    time_limit_s: f64,
    out: *mut *mut MsplaceResult,
) -> MsplaceStatus {
    guard(|| {
        non_null!(scenario, out);
        // SAFETY: `scenario` is a live handle per the contract.
        let s = unsafe { &(*scenario).scenario };
        let plan = try_status!(s.plan().map_err(from_error));
        let outcome = try_status!(solve_exact(&s.infra, &s.procedures, &plan, time_limit_s).map_err(from_error));
        match &outcome.assignment {
            Some(assignment) => finish(s, assignment, out),
            None if outcome.status == SolveStatus::Infeasible => {
                fail(MsplaceStatus::NoSolution, "the scenario is infeasible")
            }
            None => fail(MsplaceStatus::NoSolution, "time limit reached without a feasible placement"),
        }
    })
}

/// Writes the total inter-server flow of a result, in PDU/s.
///
/// # Safety
/// `result` must be a live handle and `psi` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn msplace_result_psi(result: *const MsplaceResult, psi: *mut f64) -> MsplaceStatus {
    guard(|| {
        non_null!(result, psi);
        // SAFETY: both pointers are valid per the contract.
        unsafe { *psi = (*result).file.psi.unwrap_or(0.0) };
        MsplaceStatus::Ok
    })
}

/// Serializes a result as assignment JSON.
///
/// # Safety
/// `result` must be a live handle and `json` a writable pointer. On success
/// `*json` receives a string to release with [`msplace_string_free`].
#[no_mangle]
pub unsafe extern "C" fn msplace_result_assignment_json(
    result: *const MsplaceResult,
    json: *mut *mut c_char,
) -> MsplaceStatus {
    guard(|| {
        non_null!(result, json);
        // SAFETY: both pointers are valid per the contract.
        unsafe { *json = into_raw((*result).file.to_json()) };
        MsplaceStatus::Ok
    })
}

/// Releases a result. Null is ignored.
///
/// # Safety
/// `result` must come from a solve function and not have been released
/// already.
#[no_mangle]
pub unsafe extern "C" fn msplace_result_free(result: *mut MsplaceResult) {
    if !result.is_null() {
        // SAFETY: the pointer was produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(result) });
    }
}

/// Checks assignment JSON against every placement constraint of the
/// scenario. `*feasible` is set to 1 when all pass and 0 otherwise; the
/// first violation, if any, is available from [`msplace_last_error`].
///
/// # Safety
/// `scenario` must be a live handle, `assignment_json` a NUL-terminated
/// string and `feasible` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn msplace_validate(
    scenario: *const MsplaceScenario,
    assignment_json: *const c_char,
    feasible: *mut i32,
) -> MsplaceStatus {
    guard(|| {
        non_null!(scenario, feasible);
        // SAFETY: forwarded from the caller's contract.
        let text = try_status!(unsafe { read_str(assignment_json) });
        // SAFETY: `scenario` is a live handle per the contract.
        let s = unsafe { &(*scenario).scenario };
        let plan = try_status!(s.plan().map_err(from_error));
        let file = try_status!(AssignmentFile::from_json(text).map_err(from_error));
        let (assignment, duplicates) = file.to_assignment();
        let mut report = check_constraints(&s.infra, &s.procedures, &plan, &assignment);
        if let Some(&instance) = duplicates.first() {
            report.unique_placement = Some(Violation::Duplicate { instance });
        }
        if let Some((name, v)) = report.violations().next() {
            set_error(format!("{name}: {v}"));
        }
        // SAFETY: `feasible` is writable per the contract.
        unsafe { *feasible = i32::from(report.all_pass()) };
        MsplaceStatus::Ok
    })
}

/// Copy of the message left by the calling thread's last call, or null
/// when that call left none.
#[no_mangle]
pub extern "C" fn msplace_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been released already.
#[no_mangle]
pub unsafe extern "C" fn msplace_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: the pointer was produced by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}
