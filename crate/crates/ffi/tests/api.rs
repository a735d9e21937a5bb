//! The C ABI exercised from Rust: handle lifecycle, verdicts, witnesses and
//! error reporting.

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use treesat_ffi::*;

fn fixture(name: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name);
    CString::new(p.to_str().unwrap()).unwrap()
}

/// Takes ownership of a library string.
fn owned(s: *mut c_char) -> Option<String> {
    if s.is_null() {
        return None;
    }
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { ts_string_free(s) };
    Some(text)
}

fn from_text(text: &str) -> Result<*mut TsProblem, (TsStatus, String)> {
    let text = CString::new(text).unwrap();
    let mut p = ptr::null_mut();
    match unsafe { ts_problem_from_text(text.as_ptr(), ptr::null(), &mut p) } {
        TsStatus::Ok => Ok(p),
        s => Err((s, owned(ts_last_error_message()).unwrap())),
    }
}

fn solve(p: *const TsProblem) -> *mut TsResult {
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ts_solve(p, 60.0, &mut r) }, TsStatus::Ok);
    r
}

#[test]
fn unsatisfiable_file() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ts_problem_from_file(fixture("example1.txt").as_ptr(), &mut p) }, TsStatus::Ok);
    let r = solve(p);
    unsafe {
        assert_eq!(ts_result_verdict(r), TsVerdict::Unsatisfiable);
        assert!(ts_result_witness_term(r).is_null());
        assert!(ts_result_witness_xml(r).is_null());
        assert_eq!(ts_result_witness_checks(r), 0);
        let stats = ts_result_stats(r);
        assert_eq!(stats.lean_size, stats.eventualities + stats.symbols);
        assert!(stats.iterations > 0);
        ts_result_free(r);
        ts_problem_free(p);
    }
}

#[test]
fn satisfiable_text_has_a_checked_witness() {
    let p = from_text("a & <1>b").unwrap();
    let formula = owned(unsafe { ts_problem_formula(p) }).unwrap();
    assert_eq!(formula, "(a & <1>b)");
    let r = solve(p);
    unsafe {
        assert_eq!(ts_result_verdict(r), TsVerdict::Satisfiable);
        assert_eq!(owned(ts_result_witness_term(r)).unwrap(), "a(b, #)");
        assert!(owned(ts_result_witness_xml(r)).unwrap().contains("<b"));
        assert_eq!(ts_result_witness_checks(r), 1);
        ts_result_free(r);
        ts_problem_free(p);
    }
}

#[test]
fn schema_problem_reports_its_warning() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ts_problem_from_file(fixture("example2.txt").as_ptr(), &mut p) }, TsStatus::Ok);
    unsafe {
        assert_eq!(ts_problem_warning_count(p), 1);
        assert!(owned(ts_problem_warning(p, 0)).unwrap().contains("smil.dtd"));
        assert!(ts_problem_warning(p, 1).is_null());
        let r = solve(p);
        assert_eq!(ts_result_verdict(r), TsVerdict::Satisfiable);
        assert_eq!(ts_result_witness_checks(r), 1);
        ts_result_free(r);
        ts_problem_free(p);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let (s, m) = from_text("a & (").unwrap_err();
    assert_eq!(s, TsStatus::Parse);
    assert!(!m.is_empty());

    let (s, _) = from_text("nosuch(a)").unwrap_err();
    assert_eq!(s, TsStatus::Parse);

    let p = from_text("let $X = a | <-1>$X | <1>$X in $X").unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ts_solve(p, 60.0, &mut r) }, TsStatus::Formula);
    assert!(r.is_null());
    assert!(owned(ts_last_error_message()).unwrap().contains("cycle"));

    for bad in [0.0, -1.0, f64::NAN, f64::INFINITY] {
        assert_eq!(unsafe { ts_solve(p, bad, &mut r) }, TsStatus::InvalidArgument);
    }
    unsafe { ts_problem_free(p) };

    let mut p = ptr::null_mut();
    let missing = CString::new("/nonexistent/problem.txt").unwrap();
    assert_eq!(unsafe { ts_problem_from_file(missing.as_ptr(), &mut p) }, TsStatus::Io);
    assert!(p.is_null());
}

#[test]
fn null_arguments_are_rejected() {
    let text = CString::new("T").unwrap();
    let mut p = ptr::null_mut();
    let mut r = ptr::null_mut();
    unsafe {
        assert_eq!(ts_problem_from_text(ptr::null(), ptr::null(), &mut p), TsStatus::NullArgument);
        assert_eq!(ts_problem_from_text(text.as_ptr(), ptr::null(), ptr::null_mut()), TsStatus::NullArgument);
        assert_eq!(ts_problem_from_file(ptr::null(), &mut p), TsStatus::NullArgument);
        assert_eq!(ts_solve(ptr::null(), 1.0, &mut r), TsStatus::NullArgument);
        assert_eq!(ts_result_verdict(ptr::null()), TsVerdict::Timeout);
        assert_eq!(ts_result_stats(ptr::null()), TsStats::default());
        assert!(ts_problem_formula(ptr::null()).is_null());
        ts_problem_free(ptr::null_mut());
        ts_result_free(ptr::null_mut());
        ts_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_utf8_is_rejected() {
    let bytes = CString::new(vec![0xff, 0xfe]).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ts_problem_from_text(bytes.as_ptr(), ptr::null(), &mut p) }, TsStatus::InvalidUtf8);
}

#[test]
fn version_matches_the_package() {
    let v = unsafe { CStr::from_ptr(ts_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
