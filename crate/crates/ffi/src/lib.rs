//! C interface to jetcalc.
//!
//! Systems are opaque handles created by [`jc_system_parse`] and released
//! with [`jc_system_free`]. Every fallible call returns a [`JcStatus`]; on
//! failure the message is available from [`jc_last_error`] on the same
//! thread. Strings handed out by the library are released with
//! [`jc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use jetcalc::kovalevskaya::{to_kovalevskaya, validate_kovalevskaya};
use jetcalc::oracle::OracleConfig;
use jetcalc::syslang::{self, format_expr, format_operator, SystemFile};
use jetcalc::variational::{euler, is_variational};
use jetcalc::{equals, Error, Verdict};

/// Outcome of a call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Syntax error or undeclared name in the input text.
    Parse = 3,
    /// Operator, symmetry, variable or law not declared in the system.
    UnknownName = 4,
    /// The computation itself failed (e.g. no Kovalevskaya form found).
    Computation = 5,
    /// The system lacks a block the call needs (e.g. a Lagrangian).
    MissingInput = 6,
    /// A bug inside the library; the handle should be discarded.
    Panic = 7,
}

/// Decision of an equality or property check.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JcVerdict {
    ProvedEqual = 0,
    ProvedUnequal = 1,
    ProbablyEqual = 2,
}

impl From<&Verdict> for JcVerdict {
    fn from(v: &Verdict) -> Self {
        match v {
            Verdict::ProvedEqual => JcVerdict::ProvedEqual,
            Verdict::ProvedUnequal { .. } => JcVerdict::ProvedUnequal,
            Verdict::ProbablyEqual { .. } => JcVerdict::ProbablyEqual,
        }
    }
}

/// A parsed system description.
pub struct JcSystem {
    file: SystemFile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(JcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Parse(_) | Error::UndeclaredVariable(_) => JcStatus::Parse,
            Error::UnknownName { .. } => JcStatus::UnknownName,
            _ => JcStatus::Computation,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> JcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            JcStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            JcStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(JcStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(JcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn system<'a>(p: *const JcSystem) -> Result<&'a JcSystem, Failure> {
    p.as_ref().ok_or_else(|| Failure(JcStatus::NullArgument, "system handle is null".into()))
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure(JcStatus::NullArgument, "output pointer is null".into()));
    }
    let c = CString::new(s.replace('\0', " ")).expect("nul bytes removed");
    *out = c.into_raw();
    Ok(())
}

fn oracle_config(seed: u64, trials: u32) -> OracleConfig {
    let mut c = OracleConfig { seed, ..OracleConfig::default() };
    if trials > 0 {
        c.trials = trials as usize;
    }
    c
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn jc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn jc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn jc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a system description (`.pde` text).
///
/// # Safety
/// `source` must be a nul-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jc_system_parse(source: *const c_char, out: *mut *mut JcSystem) -> JcStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure(JcStatus::NullArgument, "output pointer is null".into()));
        }
        let file = syslang::parse(text(source, "source")?).map_err(|e| Failure(JcStatus::Parse, e.to_string()))?;
        *out = Box::into_raw(Box::new(JcSystem { file }));
        Ok(())
    })
}

/// Releases a system. Null is ignored.
///
/// # Safety
/// `sys` must come from [`jc_system_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn jc_system_free(sys: *mut JcSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Canonical text of the system.
///
/// # Safety
/// `sys` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jc_system_print(sys: *const JcSystem, out: *mut *mut c_char) -> JcStatus {
    guard(|| write_string(out, syslang::print(&system(sys)?.file)))
}

/// Euler-Lagrange expressions of the system's Lagrangian, one per line.
///
/// # Safety
/// `sys` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jc_euler(sys: *const JcSystem, out: *mut *mut c_char) -> JcStatus {
    guard(|| {
        let file = &system(sys)?.file;
        let l = file.lagrangian.as_ref().ok_or_else(|| Failure(JcStatus::MissingInput, "no lagrangian block".into()))?;
        let lines: Vec<String> = euler(l, &file.context).iter().map(|e| format_expr(e, &file.context)).collect();
        write_string(out, lines.join("\n"))
    })
}

/// Universal linearization of the equations.
///
/// # Safety
/// `sys` must be a live handle; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jc_linearize(sys: *const JcSystem, out: *mut *mut c_char) -> JcStatus {
    guard(|| {
        let file = &system(sys)?.file;
        let l = jetcalc::operators::linearize(&file.system());
        write_string(out, format_operator(&l, &file.context))
    })
}

/// Helmholtz test of the equations. `out_difference`, if not null, receives
/// the text of `l - l*`.
///
/// # Safety
/// `sys` must be a live handle; `out_verdict` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jc_check_variational(
    sys: *const JcSystem,
    seed: u64,
    trials: u32,
    out_verdict: *mut JcVerdict,
    out_difference: *mut *mut c_char,
) -> JcStatus {
    guard(|| {
        if out_verdict.is_null() {
            return Err(Failure(JcStatus::NullArgument, "output pointer is null".into()));
        }
        let file = &system(sys)?.file;
        let r = is_variational(&file.system(), &file.context.oracle(oracle_config(seed, trials)))?;
        *out_verdict = (&r.verdict).into();
        if !out_difference.is_null() {
            write_string(out_difference, format_operator(&r.difference, &file.context))?;
        }
        Ok(())
    })
}

/// Searches for a Kovalevskaya form in `direction` and validates it.
/// `out_orders` (length = number of dependents) receives the solved orders;
/// `out_form`, if not null, the solved equations one per line.
///
/// # Safety
/// `sys` must be a live handle; `direction` a nul-terminated string;
/// `out_orders` must have room for one entry per dependent variable.
#[no_mangle]
pub unsafe extern "C" fn jc_kovalevskaya(
    sys: *const JcSystem,
    direction: *const c_char,
    out_orders: *mut u32,
    out_form: *mut *mut c_char,
) -> JcStatus {
    guard(|| {
        if out_orders.is_null() {
            return Err(Failure(JcStatus::NullArgument, "output pointer is null".into()));
        }
        let file = &system(sys)?.file;
        let ctx = &file.context;
        let name = text(direction, "direction")?;
        let d = ctx.indep_index(name).ok_or_else(|| {
            Failure(JcStatus::UnknownName, format!("`{name}` is not an independent variable"))
        })?;
        let mut sys = file.system();
        sys.kovalevskaya = None;
        let hints = file.kovalevskaya.as_ref().filter(|k| k.direction == d).map(|k| k.hints.clone()).unwrap_or_default();
        let form = to_kovalevskaya(&sys, d, &hints)?;
        let v = validate_kovalevskaya(&form.data(), &sys, &ctx.oracle(OracleConfig::default()))?;
        if !v.is_valid() {
            return Err(Failure(JcStatus::Computation, "form failed validation".into()));
        }
        for (k, &b) in form.orders.iter().enumerate() {
            *out_orders.add(k) = b;
        }
        if !out_form.is_null() {
            let data = form.data();
            let lines: Vec<String> = (0..ctx.m())
                .filter_map(|j| data.pivot(j, ctx.n()).map(|p| format!("{} = {}", ctx.jet_name(&p), format_expr(&form.rhs[j], ctx))))
                .collect();
            write_string(out_form, lines.join("\n"))?;
        }
        Ok(())
    })
}

/// Number of dependent variables of the system.
///
/// # Safety
/// `sys` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn jc_system_dependents(sys: *const JcSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.file.context.m())
}

/// Decides `lhs = rhs` for two expressions in the system's variables.
///
/// # Safety
/// `sys` must be a live handle; `lhs`, `rhs` nul-terminated strings;
/// `out_verdict` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn jc_equals(
    sys: *const JcSystem,
    lhs: *const c_char,
    rhs: *const c_char,
    seed: u64,
    trials: u32,
    out_verdict: *mut JcVerdict,
) -> JcStatus {
    guard(|| {
        if out_verdict.is_null() {
            return Err(Failure(JcStatus::NullArgument, "output pointer is null".into()));
        }
        let file = &system(sys)?.file;
        let ctx = &file.context;
        let parse = |s: &str| syslang::parse_expr(s, ctx).map_err(|e| Failure(JcStatus::Parse, e.to_string()));
        let a = parse(text(lhs, "lhs")?)?;
        let b = parse(text(rhs, "rhs")?)?;
        let v = equals(&a, &b, &ctx.oracle(oracle_config(seed, trials)))?;
        *out_verdict = (&v).into();
        Ok(())
    })
}
