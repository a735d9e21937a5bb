//! C ABI for the solver.
//!
//! A problem is loaded from text or a file into an opaque `TsProblem`,
//! solved into an opaque `TsResult`, and both are released with their
//! `_free` functions. Every fallible call returns a `TsStatus`; the message
//! of the last failure on the calling thread is available from
//! `ts_last_error_message`. Strings handed out by the library are owned by
//! the caller and must be released with `ts_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;
use std::time::Duration;

use treesat::formula::{pretty_print, Formula};
use treesat::parser::{expand_predicates, parse_spec, ExpandOptions};
use treesat::solver::{solve, Evaluator, SolverOptions, SolverResult, Verdict};
use treesat::tree::{decode, hedge_to_xml};

/// Outcome of a library call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input file could not be read.
    Io = 3,
    /// Syntax, predicate or schema error in the problem text.
    Parse = 4,
    /// The formula is not cycle-free or otherwise ill-formed.
    Formula = 5,
    /// A timeout that is not a positive finite number.
    InvalidArgument = 6,
    /// An internal error; the library state is unaffected.
    Panic = 7,
}

/// Solver verdict.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsVerdict {
    Satisfiable = 0,
    Unsatisfiable = 1,
    Timeout = 2,
}

/// Size of the search space and effort spent.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TsStats {
    pub lean_size: usize,
    pub eventualities: usize,
    pub symbols: usize,
    pub iterations: usize,
    pub elapsed_ms: u64,
}

/// A parsed problem with every predicate expanded.
pub struct TsProblem {
    formula: Formula,
    warnings: Vec<String>,
}

/// The verdict, statistics and witness of one solver run.
pub struct TsResult {
    result: SolverResult,
    formula: Formula,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let s = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: TsStatus, message: impl Into<String>) -> TsStatus {
    set_error(message);
    status
}

/// Runs `body`, turning a panic into `TsStatus::Panic`.
fn guarded(body: impl FnOnce() -> TsStatus) -> TsStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|_| fail(TsStatus::Panic, "internal error"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, TsStatus> {
    if p.is_null() {
        return Err(fail(TsStatus::NullArgument, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn load(text: &str, base_dir: PathBuf) -> Result<TsProblem, TsStatus> {
    let spec = parse_spec(text).map_err(|e| fail(TsStatus::Parse, e.to_string()))?;
    let opts = ExpandOptions {
        base_dir,
        strict_dtd: false,
    };
    let expansion = expand_predicates(&spec, &opts).map_err(|e| fail(TsStatus::Parse, e.to_string()))?;
    let warnings = expansion
        .schema_reports
        .iter()
        .flat_map(|r| r.warnings.iter().map(move |w| format!("{}: {w}", r.path)))
        .collect();
    Ok(TsProblem {
        formula: expansion.formula,
        warnings,
    })
}

fn store<T>(out: *mut *mut T, value: Result<T, TsStatus>) -> TsStatus {
    match value {
        Ok(v) => {
            // SAFETY: callers check `out` for NULL before building the value
            unsafe { *out = Box::into_raw(Box::new(v)) };
            TsStatus::Ok
        }
        Err(status) => status,
    }
}

/// Parses problem text. `base_dir` resolves relative schema paths and may be
/// NULL for the current directory. On success `*out` owns a new problem.
///
/// # Safety
/// `text` and a non-NULL `base_dir` must be NUL-terminated strings; `out`
/// must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_problem_from_text(
    text: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut TsProblem,
) -> TsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TsStatus::NullArgument, "out is NULL");
        }
        let text = match read_str(text, "text") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let base = if base_dir.is_null() {
            PathBuf::new()
        } else {
            match read_str(base_dir, "base_dir") {
                Ok(b) => PathBuf::from(b),
                Err(s) => return s,
            }
        };
        store(out, load(text, base))
    })
}

/// Reads and parses a problem file; schema paths resolve against its
/// directory. On success `*out` owns a new problem.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_problem_from_file(path: *const c_char, out: *mut *mut TsProblem) -> TsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TsStatus::NullArgument, "out is NULL");
        }
        let path = match read_str(path, "path") {
            Ok(p) => Path::new(p),
            Err(s) => return s,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(TsStatus::Io, format!("cannot read {}: {e}", path.display())),
        };
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        store(out, load(&text, base))
    })
}

/// The expanded formula in the solver's trace syntax, or NULL for a NULL
/// problem. Release with `ts_string_free`.
///
/// # Safety
/// `problem` must be NULL or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn ts_problem_formula(problem: *const TsProblem) -> *mut c_char {
    match problem.as_ref() {
        Some(p) => into_c_string(pretty_print(&p.formula)),
        None => ptr::null_mut(),
    }
}

/// Number of schema warnings collected while loading.
///
/// # Safety
/// `problem` must be NULL or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn ts_problem_warning_count(problem: *const TsProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.warnings.len())
}

/// The `index`-th schema warning, or NULL when out of range. Release with
/// `ts_string_free`.
///
/// # Safety
/// `problem` must be NULL or a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn ts_problem_warning(problem: *const TsProblem, index: usize) -> *mut c_char {
    problem
        .as_ref()
        .and_then(|p| p.warnings.get(index))
        .map_or(ptr::null_mut(), |w| into_c_string(w.clone()))
}

/// # Safety
/// `problem` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_problem_free(problem: *mut TsProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Decides the problem within `timeout_seconds`, which must be positive and
/// finite. On success `*out` owns a new result whose verdict may be
/// `Timeout`.
///
/// # Safety
/// `problem` must be a live problem handle; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ts_solve(problem: *const TsProblem, timeout_seconds: f64, out: *mut *mut TsResult) -> TsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(TsStatus::NullArgument, "out is NULL");
        }
        let Some(p) = problem.as_ref() else {
            return fail(TsStatus::NullArgument, "problem is NULL");
        };
        if !(timeout_seconds > 0.0 && timeout_seconds.is_finite()) {
            return fail(TsStatus::InvalidArgument, format!("invalid timeout {timeout_seconds}"));
        }
        let opts = SolverOptions {
            timeout: Some(Duration::from_secs_f64(timeout_seconds)),
        };
        let value = solve(&p.formula, &opts)
            .map(|result| TsResult {
                result,
                formula: p.formula.clone(),
            })
            .map_err(|e| fail(TsStatus::Formula, e.to_string()));
        store(out, value)
    })
}

/// The verdict of a result; `Timeout` for a NULL result.
///
/// # Safety
/// `result` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ts_result_verdict(result: *const TsResult) -> TsVerdict {
    match result.as_ref().map(|r| r.result.verdict) {
        Some(Verdict::Satisfiable) => TsVerdict::Satisfiable,
        Some(Verdict::Unsatisfiable) => TsVerdict::Unsatisfiable,
        Some(Verdict::Timeout) | None => TsVerdict::Timeout,
    }
}

/// Lean size and effort of a run; all zero for a NULL result.
///
/// # Safety
/// `result` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ts_result_stats(result: *const TsResult) -> TsStats {
    result.as_ref().map_or_else(TsStats::default, |r| {
        let s = &r.result.stats;
        TsStats {
            lean_size: s.lean_size,
            eventualities: s.eventualities,
            symbols: s.symbols,
            iterations: s.iterations,
            elapsed_ms: s.total_time.as_millis() as u64,
        }
    })
}

/// The witness as a binary term such as `a(b, #)`, or NULL unless the
/// verdict is satisfiable. Release with `ts_string_free`.
///
/// # Safety
/// `result` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ts_result_witness_term(result: *const TsResult) -> *mut c_char {
    result
        .as_ref()
        .and_then(|r| r.result.witness.as_ref())
        .map_or(ptr::null_mut(), |w| into_c_string(w.term_print()))
}

/// The witness as XML with context and target marks, or NULL unless the
/// verdict is satisfiable. Release with `ts_string_free`.
///
/// # Safety
/// `result` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ts_result_witness_xml(result: *const TsResult) -> *mut c_char {
    result
        .as_ref()
        .and_then(|r| r.result.witness.as_ref())
        .map_or(ptr::null_mut(), |w| into_c_string(hedge_to_xml(&decode(w))))
}

/// 1 when the witness satisfies the formula under the independent model
/// checker, 0 otherwise (including when there is no witness).
///
/// # Safety
/// `result` must be NULL or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn ts_result_witness_checks(result: *const TsResult) -> i32 {
    let Some(r) = result.as_ref() else { return 0 };
    let Some(w) = r.result.witness.as_ref() else { return 0 };
    Evaluator::new(&r.formula).is_ok_and(|e| e.holds_somewhere(&w.flatten())) as i32
}

/// # Safety
/// `result` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_result_free(result: *mut TsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message of the last failed call on this thread, or NULL if none.
/// Release with `ts_string_free`.
#[no_mangle]
pub extern "C" fn ts_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().clone().map_or(ptr::null_mut(), CString::into_raw))
}

/// Library version, statically allocated.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
