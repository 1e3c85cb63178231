//! C ABI over `markov-redaction`.
//!
//! Every fallible function returns an [`MrStatus`] and writes its result
//! through an out-pointer. On failure the message is kept per thread and can
//! be read with [`mr_last_error`]. Models and mechanisms are opaque handles
//! released with their `_free` functions; strings returned by the library are
//! released with [`mr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use markov_redaction::audit::exact_leakage_capped;
use markov_redaction::{
    build_3r_numerical, build_3r_relaxation, build_mq, delta_star, dim_upper_bound, exact_utility,
    influence_high, influence_low, monte_carlo_utility, Error, MarkovModel, MechanismFile,
    MechanismKind, NumericalSearch, RedactionMechanism,
};

/// Status codes returned by every fallible function.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidModel = 2,
    Domain = 3,
    IndexOutOfRange = 4,
    Limit = 5,
    Budget = 6,
    Infeasible = 7,
    InvalidMechanism = 8,
    Parse = 9,
    Io = 10,
    Panic = 11,
}

impl From<&Error> for MrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::InvalidModel(_) => MrStatus::InvalidModel,
            Error::Domain(_) => MrStatus::Domain,
            Error::IndexOutOfRange { .. } => MrStatus::IndexOutOfRange,
            Error::EnumerationLimit { .. } | Error::DistanceNotFound { .. } => MrStatus::Limit,
            Error::Budget { .. } => MrStatus::Budget,
            Error::Infeasible(_) => MrStatus::Infeasible,
            Error::InvalidMechanism(_) => MrStatus::InvalidMechanism,
            Error::Parse { .. } => MrStatus::Parse,
            Error::Io { .. } => MrStatus::Io,
        }
    }
}

/// Opaque chain model.
pub struct MrModel(MarkovModel);

/// Opaque redaction mechanism.
pub struct MrMechanism(RedactionMechanism);

/// Values of the `kind` argument of [`mr_build`].
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrKind {
    Mq = 0,
    ThreeRRelaxation = 1,
    ThreeRNumerical = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(MrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(MrStatus::from(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MrStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            MrStatus::Panic
        }
    }
}

unsafe fn model_ref<'a>(model: *const MrModel) -> Result<&'a MarkovModel, Failure> {
    model.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

unsafe fn mech_ref<'a>(mech: *const MrMechanism) -> Result<&'a RedactionMechanism, Failure> {
    mech.as_ref().map(|m| &m.0).ok_or_else(|| null("mechanism"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

fn split(has_split: bool, eps_left: f64, eps_right: f64) -> Option<(f64, f64)> {
    has_split.then_some((eps_left, eps_right))
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn mr_model_new(
    n: usize,
    alpha: f64,
    beta: f64,
    out: *mut *mut MrModel,
) -> MrStatus {
    guard(|| {
        let m = MarkovModel::new(n, alpha, beta)?;
        put(out, Box::into_raw(Box::new(MrModel(m))))
    })
}

/// # Safety
/// `model` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_model_free(model: *mut MrModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `pi0` and `pi1` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_model_stationary(
    model: *const MrModel,
    pi0: *mut f64,
    pi1: *mut f64,
) -> MrStatus {
    guard(|| {
        let (a, b) = model_ref(model)?.stationary_marginal();
        put(pi0, a)?;
        put(pi1, b)
    })
}

/// Influence of a 0-valued private record at distance `delta`; +inf at 0.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_influence_low(
    model: *const MrModel,
    delta: usize,
    out: *mut f64,
) -> MrStatus {
    guard(|| put(out, influence_low(model_ref(model)?, delta).value()))
}

/// Influence of a 1-valued private record at distance `delta`; +inf at 0.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_influence_high(
    model: *const MrModel,
    delta: usize,
    out: *mut f64,
) -> MrStatus {
    guard(|| put(out, influence_high(model_ref(model)?, delta).value()))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_delta_star(
    model: *const MrModel,
    eps: f64,
    out: *mut usize,
) -> MrStatus {
    guard(|| put(out, delta_star(model_ref(model)?, eps)?))
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_dim_upper_bound(
    model: *const MrModel,
    p: usize,
    eps: f64,
    out: *mut f64,
) -> MrStatus {
    guard(|| put(out, dim_upper_bound(model_ref(model)?, p, eps)?.value))
}

/// Builds a mechanism. The split is used only when `has_split` is true;
/// `grid_steps` and `cap` only apply to the numerical construction, where 0
/// selects the default.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mr_build(
    model: *const MrModel,
    kind: i32,
    p: usize,
    eps: f64,
    has_split: bool,
    eps_left: f64,
    eps_right: f64,
    grid_steps: usize,
    cap: usize,
    out: *mut *mut MrMechanism,
) -> MrStatus {
    guard(|| {
        let m = model_ref(model)?;
        let s = split(has_split, eps_left, eps_right);
        let mech = match kind {
            k if k == MrKind::Mq as i32 => {
                if has_split {
                    return Err(Failure(
                        MrStatus::Domain,
                        "mq does not take a budget split".into(),
                    ));
                }
                build_mq(m, p, eps)?.1
            }
            k if k == MrKind::ThreeRRelaxation as i32 => build_3r_relaxation(m, p, eps, s)?.1,
            k if k == MrKind::ThreeRNumerical as i32 => {
                let mut search = NumericalSearch::default();
                if grid_steps > 0 {
                    search.grid_steps = grid_steps;
                }
                if cap > 0 {
                    search.cap = cap;
                }
                build_3r_numerical(m, p, eps, s, &search)?.1
            }
            other => {
                return Err(Failure(
                    MrStatus::Domain,
                    format!("unknown mechanism kind {other}"),
                ))
            }
        };
        put(out, Box::into_raw(Box::new(MrMechanism(mech))))
    })
}

/// Custom mechanism from a row-major `n x 2` table of redaction
/// probabilities `r_t(0), r_t(1)`.
///
/// # Safety
/// `table` must point to `2 * n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_mechanism_new(
    p: usize,
    table: *const f64,
    n: usize,
    out: *mut *mut MrMechanism,
) -> MrStatus {
    guard(|| {
        if table.is_null() {
            return Err(null("table"));
        }
        let flat = std::slice::from_raw_parts(table, 2 * n);
        let rows = flat.chunks_exact(2).map(|r| [r[0], r[1]]).collect();
        let mech = RedactionMechanism::new(p, MechanismKind::Custom, rows)?;
        put(out, Box::into_raw(Box::new(MrMechanism(mech))))
    })
}

/// # Safety
/// `mech` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_mechanism_free(mech: *mut MrMechanism) {
    if !mech.is_null() {
        drop(Box::from_raw(mech));
    }
}

/// # Safety
/// `mech` must be a live handle; `n` and `p` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_mechanism_shape(
    mech: *const MrMechanism,
    n: *mut usize,
    p: *mut usize,
) -> MrStatus {
    guard(|| {
        let m = mech_ref(mech)?;
        put(n, m.n())?;
        put(p, m.p())
    })
}

/// Redaction probabilities of record `t` (1-based).
///
/// # Safety
/// `mech` must be a live handle; `r0` and `r1` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_mechanism_row(
    mech: *const MrMechanism,
    t: usize,
    r0: *mut f64,
    r1: *mut f64,
) -> MrStatus {
    guard(|| {
        let m = mech_ref(mech)?;
        if t == 0 || t > m.n() {
            return Err(Error::IndexOutOfRange { index: t, n: m.n() }.into());
        }
        let [a, b] = m.row(t);
        put(r0, a)?;
        put(r1, b)
    })
}

/// Exact leakage by enumeration; `cap` of 0 selects the default.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_exact_leakage(
    model: *const MrModel,
    mech: *const MrMechanism,
    cap: usize,
    out: *mut f64,
) -> MrStatus {
    guard(|| {
        let cap = if cap == 0 {
            markov_redaction::DEFAULT_ENUMERATION_CAP
        } else {
            cap
        };
        put(
            out,
            exact_leakage_capped(model_ref(model)?, mech_ref(mech)?, cap)?.leakage,
        )
    })
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_exact_utility(
    model: *const MrModel,
    mech: *const MrMechanism,
    out: *mut f64,
) -> MrStatus {
    guard(|| {
        put(
            out,
            exact_utility(model_ref(model)?, mech_ref(mech)?)?.exact,
        )
    })
}

/// # Safety
/// Handles must be live; `estimate` and `standard_error` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_monte_carlo_utility(
    model: *const MrModel,
    mech: *const MrMechanism,
    trials: u64,
    seed: u64,
    estimate: *mut f64,
    standard_error: *mut f64,
) -> MrStatus {
    guard(|| {
        let report = monte_carlo_utility(model_ref(model)?, mech_ref(mech)?, trials, seed)?;
        let mc = report
            .monte_carlo
            .ok_or_else(|| Failure(MrStatus::Domain, "no estimate".into()))?;
        put(estimate, mc.estimate)?;
        put(standard_error, mc.standard_error)
    })
}

/// Serializes a model and mechanism in the mechanism file format. Free the
/// result with [`mr_string_free`].
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_mechanism_to_string(
    model: *const MrModel,
    mech: *const MrMechanism,
    out: *mut *mut c_char,
) -> MrStatus {
    guard(|| {
        let file = MechanismFile::new(*model_ref(model)?, mech_ref(mech)?.clone())?;
        let text =
            CString::new(file.to_text()).map_err(|e| Failure(MrStatus::Domain, e.to_string()))?;
        put(out, text.into_raw())
    })
}

/// Parses the mechanism file format into new model and mechanism handles.
///
/// # Safety
/// `text` must be a NUL-terminated string; `model` and `mech` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mr_mechanism_from_string(
    text: *const c_char,
    model: *mut *mut MrModel,
    mech: *mut *mut MrMechanism,
) -> MrStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if model.is_null() || mech.is_null() {
            return Err(null("output pointer"));
        }
        let s = CStr::from_ptr(text)
            .to_str()
            .map_err(|e| Failure(MrStatus::Parse, e.to_string()))?;
        let file = MechanismFile::parse(s)?;
        put(model, Box::into_raw(Box::new(MrModel(file.model))))?;
        put(mech, Box::into_raw(Box::new(MrMechanism(file.mechanism))))
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
