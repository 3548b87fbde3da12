//! C ABI over `oss-core`.
//!
//! Instances and solutions cross the boundary as opaque handles. Every
//! fallible call returns an [`OssStatus`]; on failure a description is
//! available from [`oss_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use oss_core::driver::{self, GridChoice, SolveOptions};
use oss_core::model::{Instance, NodeId};
use oss_core::oracle;
use oss_core::plan::ObservationPlan;
use oss_core::{OssError, Solution};

/// Result codes of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OssStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    InvalidArgument = 5,
    Guard = 6,
    BudgetExceeded = 7,
    Io = 8,
    /// The requested value is absent, such as an exact reward that was
    /// never computed.
    Unavailable = 9,
    OutOfRange = 10,
    Panic = 11,
}

/// Opaque handle to a validated instance.
pub struct OssInstance(Instance);

/// Opaque handle to a solver or oracle result.
pub struct OssSolution(Solution);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: OssStatus, msg: impl Into<String>) -> OssStatus {
    set_error(msg);
    status
}

fn from_core(e: OssError) -> OssStatus {
    let status = match &e {
        OssError::Parse(_) => OssStatus::Parse,
        OssError::Validation { .. } => OssStatus::Validation,
        OssError::Guard(_) => OssStatus::Guard,
        OssError::InvalidArgument(_) => OssStatus::InvalidArgument,
        OssError::BudgetExceeded { .. } => OssStatus::BudgetExceeded,
        OssError::Io(_) => OssStatus::Io,
    };
    fail(status, e.to_string())
}

fn guarded(body: impl FnOnce() -> OssStatus) -> OssStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(OssStatus::Panic, "internal panic"),
    }
}

/// Message of the last failed call on this thread, or null if none failed.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn oss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parses and validates an instance document.
///
/// # Safety
/// `json` must be null or a NUL-terminated string; `out` must be null or
/// point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn oss_instance_parse(json: *const c_char, out: *mut *mut OssInstance) -> OssStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            return fail(OssStatus::NullArgument, "null argument");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(OssStatus::InvalidUtf8, "instance text is not UTF-8");
        };
        match Instance::parse(text) {
            Ok(inst) => {
                *out = Box::into_raw(Box::new(OssInstance(inst)));
                OssStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `inst` must be null or a handle from [`oss_instance_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oss_instance_free(inst: *mut OssInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn oss_instance_node_count(inst: *const OssInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.len())
}

/// Time budget, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn oss_instance_budget(inst: *const OssInstance) -> u64 {
    inst.as_ref().map_or(0, |i| i.0.budget())
}

/// Solves with the grid recipe for accuracy `epsilon`. `threads` = 0 uses
/// the global pool. With `exact_eval`, the plan is also evaluated exactly.
///
/// # Safety
/// `inst` must be a live instance handle; `out` must point to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn oss_solve(
    inst: *const OssInstance,
    epsilon: f64,
    threads: u32,
    exact_eval: bool,
    out: *mut *mut OssSolution,
) -> OssStatus {
    guarded(|| {
        let Some(inst) = inst.as_ref() else {
            return fail(OssStatus::NullArgument, "null instance");
        };
        if out.is_null() {
            return fail(OssStatus::NullArgument, "null output pointer");
        }
        let opts = SolveOptions {
            grids: GridChoice::Recipe(epsilon),
            exact_eval,
            threads: (threads > 0).then_some(threads as usize),
            no_timing: false,
        };
        match driver::solve(&inst.0, &opts) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(OssSolution(sol)));
                OssStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Optimal plan by exhaustive enumeration.
///
/// # Safety
/// As for [`oss_solve`].
#[no_mangle]
pub unsafe extern "C" fn oss_solve_exact(inst: *const OssInstance, out: *mut *mut OssSolution) -> OssStatus {
    guarded(|| {
        let Some(inst) = inst.as_ref() else {
            return fail(OssStatus::NullArgument, "null instance");
        };
        if out.is_null() {
            return fail(OssStatus::NullArgument, "null output pointer");
        }
        match driver::exact(&inst.0, None) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(OssSolution(sol)));
                OssStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `sol` must be null or a solution handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oss_solution_free(sol: *mut OssSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

unsafe fn read_solution<T>(
    sol: *const OssSolution,
    out: *mut T,
    get: impl FnOnce(&Solution) -> Option<T>,
) -> OssStatus {
    let Some(sol) = sol.as_ref() else {
        return fail(OssStatus::NullArgument, "null solution");
    };
    if out.is_null() {
        return fail(OssStatus::NullArgument, "null output pointer");
    }
    match get(&sol.0) {
        Some(v) => {
            *out = v;
            OssStatus::Ok
        }
        None => fail(OssStatus::Unavailable, "value not available"),
    }
}

/// # Safety
/// `sol` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oss_solution_predicted_reward(sol: *const OssSolution, out: *mut f64) -> OssStatus {
    read_solution(sol, out, |s| Some(s.predicted_reward))
}

/// Fails with `Unavailable` unless exact evaluation was requested.
///
/// # Safety
/// `sol` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oss_solution_exact_reward(sol: *const OssSolution, out: *mut f64) -> OssStatus {
    read_solution(sol, out, |s| s.exact_reward)
}

/// # Safety
/// `sol` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oss_solution_delta_u_bound(sol: *const OssSolution, out: *mut f64) -> OssStatus {
    read_solution(sol, out, |s| Some(s.delta_u_bound))
}

/// # Safety
/// `sol` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oss_solution_time_used(sol: *const OssSolution, out: *mut u64) -> OssStatus {
    read_solution(sol, out, |s| Some(s.time_used))
}

/// Number of distinct observed nodes in the plan.
///
/// # Safety
/// `sol` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oss_solution_plan_len(sol: *const OssSolution, out: *mut usize) -> OssStatus {
    read_solution(sol, out, |s| Some(s.plan.entries().len()))
}

/// The `index`-th plan entry in ascending node order.
///
/// # Safety
/// `sol` must be a live solution handle; `node` and `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oss_solution_plan_entry(
    sol: *const OssSolution,
    index: usize,
    node: *mut u32,
    count: *mut u32,
) -> OssStatus {
    guarded(|| {
        let Some(sol) = sol.as_ref() else {
            return fail(OssStatus::NullArgument, "null solution");
        };
        if node.is_null() || count.is_null() {
            return fail(OssStatus::NullArgument, "null output pointer");
        }
        match sol.0.plan.entries().get(index) {
            Some(&(id, m)) => {
                *node = id.0;
                *count = m;
                OssStatus::Ok
            }
            None => fail(OssStatus::OutOfRange, format!("plan has no entry {index}")),
        }
    })
}

/// Serializes the solution document. Release the string with
/// [`oss_string_free`].
///
/// # Safety
/// `sol` must be a live solution handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oss_solution_to_json(sol: *const OssSolution, out: *mut *mut c_char) -> OssStatus {
    guarded(|| {
        let Some(sol) = sol.as_ref() else {
            return fail(OssStatus::NullArgument, "null solution");
        };
        if out.is_null() {
            return fail(OssStatus::NullArgument, "null output pointer");
        }
        match CString::new(sol.0.to_json()) {
            Ok(s) => {
                *out = s.into_raw();
                OssStatus::Ok
            }
            Err(_) => fail(OssStatus::Panic, "document contains NUL"),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Exact expected reward of a plan given as `len` node ids; an id listed k
/// times is observed k times. The plan must fit the budget.
///
/// # Safety
/// `inst` must be a live instance handle; `nodes` must point to `len`
/// readable ids (or be null when `len` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oss_eval_exact(
    inst: *const OssInstance,
    nodes: *const u32,
    len: usize,
    out: *mut f64,
) -> OssStatus {
    guarded(|| {
        let Some(inst) = inst.as_ref() else {
            return fail(OssStatus::NullArgument, "null instance");
        };
        if out.is_null() || (nodes.is_null() && len > 0) {
            return fail(OssStatus::NullArgument, "null argument");
        }
        let ids = if len == 0 {
            &[][..]
        } else {
            std::slice::from_raw_parts(nodes, len)
        };
        let plan = ObservationPlan::from_counts(ids.iter().map(|&id| (NodeId(id), 1)));
        let result = plan
            .check_feasible(&inst.0)
            .and_then(|_| oracle::eval_exact(&inst.0, &plan));
        match result {
            Ok(eval) => {
                *out = eval.exact_reward;
                OssStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}
