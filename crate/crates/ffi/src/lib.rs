//! C ABI over `cqa-core`.
//!
//! Handles are opaque pointers owned by the caller and released with the
//! matching `_free` function. Every fallible call returns a [`CqaStatus`];
//! on failure a message is kept per thread and read with
//! [`cqa_last_error`]. Strings returned through out-parameters are
//! allocated here and must be released with [`cqa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use cqa_core::datagen::{generate, GenConfig};
use cqa_core::engine::{
    certain_boolean, consistent_answers, AnswerReport, EngineConfig, EngineError, KeyPath, Problem, Strategy,
    Verdict,
};
use cqa_core::instance::Instance;
use cqa_core::loader::load;
use cqa_core::query::{DenialConstraint, UnionQuery};
use cqa_core::solver::{SolveError, SolverConfig};
use cqa_core::value::format_tuple;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Load = 3,
    Engine = 4,
    OutOfRange = 5,
    NotBoolean = 6,
    Incomplete = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqaStrategy {
    MaxSat = 0,
    IterSat = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CqaVerdict {
    Consistent = 0,
    Inconsistent = 1,
    Unknown = 2,
}

/// Engine options. Obtain defaults from [`cqa_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CqaOptions {
    pub strategy: CqaStrategy,
    pub optimize: bool,
    /// Encode keys as generic denial constraints.
    pub keys_as_denials: bool,
    pub seed: u64,
    /// Conflict limit per SAT call; 0 means unlimited.
    pub conflict_budget: u64,
}

/// A loaded instance with its constraints and query.
pub struct CqaProblem {
    instance: Instance,
    dcs: Vec<DenialConstraint>,
    query: UnionQuery,
}

/// Outcome of a consistent-answers run.
pub struct CqaReport {
    inner: AnswerReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    let c = CString::new(s).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), (CqaStatus, String)>) -> CqaStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CqaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal error: {msg}"));
            CqaStatus::Panic
        }
    }
}

fn null(what: &str) -> (CqaStatus, String) {
    (CqaStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CqaStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (CqaStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, (CqaStatus, String)> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (CqaStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn give_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("nul bytes removed")
        .into_raw()
}

fn engine_config(o: &CqaOptions) -> EngineConfig {
    EngineConfig {
        strategy: match o.strategy {
            CqaStrategy::MaxSat => Strategy::MaxSat,
            CqaStrategy::IterSat => Strategy::IterSat,
        },
        optimize: o.optimize,
        key_path: if o.keys_as_denials {
            KeyPath::Denial
        } else {
            KeyPath::Native
        },
        solver_config: SolverConfig {
            seed: o.seed,
            conflict_budget: (o.conflict_budget > 0).then_some(o.conflict_budget),
        },
        ..EngineConfig::default()
    }
}

fn options_or_default(o: *const CqaOptions) -> CqaOptions {
    // SAFETY: caller passes null or a valid pointer.
    unsafe { o.as_ref() }
        .copied()
        .unwrap_or_else(|| cqa_options_default())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cqa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn cqa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cqa_options_default() -> CqaOptions {
    let d = EngineConfig::default();
    CqaOptions {
        strategy: CqaStrategy::MaxSat,
        optimize: d.optimize,
        keys_as_denials: false,
        seed: d.solver_config.seed,
        conflict_budget: d.solver_config.conflict_budget.unwrap_or(0),
    }
}

/// Load a problem from disk. `constraints` may be null for keys only.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be valid
/// for writes.
#[no_mangle]
pub unsafe extern "C" fn cqa_problem_load(
    schema: *const c_char,
    data_dir: *const c_char,
    constraints: *const c_char,
    query: *const c_char,
    out: *mut *mut CqaProblem,
) -> CqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let schema = str_arg(schema, "schema")?;
        let data = str_arg(data_dir, "data_dir")?;
        let constraints = opt_str_arg(constraints, "constraints")?;
        let query = str_arg(query, "query")?;
        let l = load(
            Path::new(schema),
            Path::new(data),
            constraints.map(Path::new),
            Some(Path::new(query)),
        )
        .map_err(|e| (CqaStatus::Load, e.to_string()))?;
        let p = CqaProblem {
            instance: l.instance,
            dcs: l.dcs,
            query: l.query.expect("query path given"),
        };
        *out = Box::into_raw(Box::new(p));
        Ok(())
    })
}

/// Generate a synthetic problem for a catalog query.
///
/// # Safety
/// `query` must be NUL-terminated; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cqa_problem_generate(
    query: *const c_char,
    rsize: usize,
    indeg: f64,
    seed: u64,
    out: *mut *mut CqaProblem,
) -> CqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = str_arg(query, "query")?;
        let g = generate(&GenConfig::new(name, rsize, indeg, seed))
            .map_err(|e| (CqaStatus::Load, e.to_string()))?;
        *out = Box::into_raw(Box::new(CqaProblem {
            instance: g.instance,
            dcs: g.dcs,
            query: g.query,
        }));
        Ok(())
    })
}

/// Number of facts in the problem's instance, or 0 for null.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cqa_problem_fact_count(problem: *const CqaProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.instance.len())
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cqa_problem_free(problem: *mut CqaProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Compute consistent answers. `options` may be null for defaults.
///
/// # Safety
/// `problem` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cqa_answer(
    problem: *const CqaProblem,
    options: *const CqaOptions,
    out: *mut *mut CqaReport,
) -> CqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = handle(problem, "problem")?;
        let cfg = engine_config(&options_or_default(options));
        let prob = Problem {
            instance: &p.instance,
            dcs: &p.dcs,
            query: &p.query,
        };
        let r = consistent_answers(&prob, &cfg).map_err(|e| (CqaStatus::Engine, e.to_string()))?;
        *out = Box::into_raw(Box::new(CqaReport { inner: r }));
        Ok(())
    })
}

/// Decide whether a boolean query is true in every repair.
///
/// # Safety
/// `problem` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cqa_certain(
    problem: *const CqaProblem,
    options: *const CqaOptions,
    out: *mut bool,
) -> CqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = handle(problem, "problem")?;
        if !p.query.is_boolean() {
            return Err((CqaStatus::NotBoolean, "query has head variables".into()));
        }
        let cfg = engine_config(&options_or_default(options));
        let prob = Problem {
            instance: &p.instance,
            dcs: &p.dcs,
            query: &p.query,
        };
        match certain_boolean(&prob, &cfg) {
            Ok(b) => {
                *out = b;
                Ok(())
            }
            Err(e @ EngineError::Solve(SolveError::Unknown)) => Err((CqaStatus::Incomplete, e.to_string())),
            Err(e) => Err((CqaStatus::Engine, e.to_string())),
        }
    })
}

/// Number of potential answers, or 0 for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cqa_report_answer_count(report: *const CqaReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.answers.len())
}

/// Number of solver iterations, or 0 for null.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cqa_report_iterations(report: *const CqaReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.iterations)
}

/// Whether every answer got a definite verdict.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cqa_report_complete(report: *const CqaReport) -> bool {
    report.as_ref().is_some_and(|r| r.inner.complete)
}

/// Answer `index` rendered as `(v1, v2, ...)`.
///
/// # Safety
/// `report` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cqa_report_answer(
    report: *const CqaReport,
    index: usize,
    out: *mut *mut c_char,
) -> CqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let r = handle(report, "report")?;
        let a = r.inner.answers.get(index).ok_or_else(|| {
            (
                CqaStatus::OutOfRange,
                format!("index {index} out of range for {} answers", r.inner.answers.len()),
            )
        })?;
        *out = give_string(format_tuple(&a.answer));
        Ok(())
    })
}

/// Verdict of answer `index`.
///
/// # Safety
/// `report` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cqa_report_verdict(
    report: *const CqaReport,
    index: usize,
    out: *mut CqaVerdict,
) -> CqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = handle(report, "report")?;
        let a = r.inner.answers.get(index).ok_or_else(|| {
            (
                CqaStatus::OutOfRange,
                format!("index {index} out of range for {} answers", r.inner.answers.len()),
            )
        })?;
        *out = match a.verdict {
            Verdict::Consistent => CqaVerdict::Consistent,
            Verdict::Inconsistent => CqaVerdict::Inconsistent,
            Verdict::Unknown => CqaVerdict::Unknown,
        };
        Ok(())
    })
}

/// The full report as JSON.
///
/// # Safety
/// `report` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cqa_report_json(report: *const CqaReport, out: *mut *mut c_char) -> CqaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let r = handle(report, "report")?;
        *out = give_string(r.inner.to_json());
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cqa_report_free(report: *mut CqaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cqa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
