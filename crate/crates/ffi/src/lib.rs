//! C ABI over `vesselsim`.
//!
//! Conventions:
//! - every fallible function returns a [`VsStatus`] and writes results through
//!   out-pointers, which are left untouched on failure;
//! - `vs_last_error_message` describes the most recent failure on the calling
//!   thread;
//! - handles and strings returned by the library are released with the
//!   matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use vesselsim::bell::{combination, Classification};
use vesselsim::quantum::{born_sample, make_state, schmidt_rank, singlet_expectation, MeasurementDirection};
use vesselsim::report::{run_command, write_csv, Command};
use vesselsim::scenario::parse_scenario_str;
use vesselsim::vessel::{joint_outcome_ab, simulate_flow, SiphonDiameters, TiePolicy, VesselSystem};
use vesselsim::{Error, Scenario, VesselSuperpositionState};

/// Status codes. 2 and 3 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsStatus {
    Ok = 0,
    NullPointer = 1,
    ConfigError = 2,
    DomainError = 3,
    DegenerateTie = 4,
    InvalidUtf8 = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsTiePolicy {
    Error = 0,
    FavorLeft = 1,
    FavorRight = 2,
    /// Uses the accompanying coin seed.
    SplitCoin = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsClassification {
    Local = 0,
    QuantumAttainable = 1,
    SuperQuantum = 2,
}

/// Opaque parsed scenario.
pub struct VsScenario(Scenario);

/// Opaque superposition state over the 11 final splits.
pub struct VsState(VesselSuperpositionState);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> VsStatus {
    match err {
        Error::Config(_) | Error::Io(_) => VsStatus::ConfigError,
        Error::DegenerateTie(_) => VsStatus::DegenerateTie,
        _ => VsStatus::DomainError,
    }
}

fn guard(f: impl FnOnce() -> Result<(), VsStatus>) -> VsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_last_error("internal panic");
            VsStatus::Panic
        }
    }
}

fn fail(err: Error) -> VsStatus {
    set_last_error(err.to_string());
    status_of(&err)
}

fn null(what: &str) -> VsStatus {
    set_last_error(format!("null pointer: {what}"));
    VsStatus::NullPointer
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, VsStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_last_error(format!("{what} is not valid UTF-8"));
        VsStatus::InvalidUtf8
    })
}

fn into_c_string(s: String) -> Result<*mut c_char, VsStatus> {
    CString::new(s).map(CString::into_raw).map_err(|_| {
        set_last_error("output contains an interior NUL byte");
        VsStatus::DomainError
    })
}

fn tie_policy(policy: VsTiePolicy, coin_seed: u64) -> TiePolicy {
    match policy {
        VsTiePolicy::Error => TiePolicy::Error,
        VsTiePolicy::FavorLeft => TiePolicy::FavorLeft,
        VsTiePolicy::FavorRight => TiePolicy::FavorRight,
        VsTiePolicy::SplitCoin => TiePolicy::SplitCoin(coin_seed),
    }
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn vs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a scenario JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_scenario_parse(json: *const c_char, out: *mut *mut VsScenario) -> VsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(json, "json")?;
        let scenario = parse_scenario_str(text).map_err(fail)?;
        *out = Box::into_raw(Box::new(VsScenario(scenario)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must come from `vs_scenario_parse` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vs_scenario_free(scenario: *mut VsScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Seed recorded in a scenario.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_scenario_seed(scenario: *const VsScenario, out: *mut u64) -> VsStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = s.0.seed;
        Ok(())
    })
}

unsafe fn run_to_string(
    scenario: *const VsScenario,
    subcommand: *const c_char,
    out: *mut *mut c_char,
    render: impl FnOnce(Command, &Scenario) -> Result<String, Error>,
) -> VsStatus {
    guard(|| {
        let s = scenario.as_ref().ok_or_else(|| null("scenario"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let command: Command = read_str(subcommand, "subcommand")?.parse().map_err(fail)?;
        let text = render(command, &s.0).map_err(fail)?;
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// Runs a subcommand (`vessel-chsh`, `locality-check`, `sample-state`,
/// `quantum-chsh`, `flow`) and returns the JSON report in `*out_json`, to be
/// released with `vs_string_free`. `workers` = 0 uses one thread per core.
///
/// # Safety
/// Pointers must be valid; `subcommand` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vs_run(
    scenario: *const VsScenario,
    subcommand: *const c_char,
    workers: usize,
    out_json: *mut *mut c_char,
) -> VsStatus {
    run_to_string(scenario, subcommand, out_json, |cmd, s| {
        Ok(run_command(cmd, s, workers)?.to_json())
    })
}

/// Per-run CSV dump of a subcommand, released with `vs_string_free`.
///
/// # Safety
/// Pointers must be valid; `subcommand` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn vs_run_csv(
    scenario: *const VsScenario,
    subcommand: *const c_char,
    out_csv: *mut *mut c_char,
) -> VsStatus {
    run_to_string(scenario, subcommand, out_csv, |cmd, s| {
        let mut buf = Vec::new();
        write_csv(cmd, s, &mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
    })
}

/// Outcomes (+1/-1) of the coincidence experiment AB.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_joint_outcome_ab(
    lambda_a: f64,
    lambda_b: f64,
    policy: VsTiePolicy,
    coin_seed: u64,
    out_left: *mut i8,
    out_right: *mut i8,
) -> VsStatus {
    guard(|| {
        if out_left.is_null() || out_right.is_null() {
            return Err(null("out_left/out_right"));
        }
        let lambda = SiphonDiameters::new(lambda_a, lambda_b).map_err(fail)?;
        let (l, r) = joint_outcome_ab(lambda, tie_policy(policy, coin_seed)).map_err(fail)?;
        *out_left = l.value();
        *out_right = r.value();
        Ok(())
    })
}

/// Time-stepped drainage of both siphons; volumes in liters.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_simulate_flow(
    lambda_a: f64,
    lambda_b: f64,
    total_volume: f64,
    dt: f64,
    out_x_left: *mut f64,
    out_x_right: *mut f64,
) -> VsStatus {
    guard(|| {
        if out_x_left.is_null() || out_x_right.is_null() {
            return Err(null("out_x_left/out_x_right"));
        }
        let lambda = SiphonDiameters::new(lambda_a, lambda_b).map_err(fail)?;
        let system = VesselSystem::new(total_volume, true).map_err(fail)?;
        let split = simulate_flow(lambda, system, dt).map_err(fail)?;
        *out_x_left = split.x_left;
        *out_x_right = split.x_right;
        Ok(())
    })
}

/// `E(A'B') + E(A'B) + E(AB') - E(AB)` and its classification.
///
/// # Safety
/// Out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_bell_statistic(
    e_aprime_bprime: f64,
    e_aprime_b: f64,
    e_a_bprime: f64,
    e_ab: f64,
    out_value: *mut f64,
    out_class: *mut VsClassification,
) -> VsStatus {
    guard(|| {
        if out_value.is_null() || out_class.is_null() {
            return Err(null("out_value/out_class"));
        }
        let means = [e_aprime_bprime, e_aprime_b, e_a_bprime, e_ab];
        if means.iter().any(|m| m.is_nan() || m.abs() > 1.0) {
            set_last_error("expectation values must lie in [-1, 1]");
            return Err(VsStatus::DomainError);
        }
        let value = combination(e_aprime_bprime, e_aprime_b, e_a_bprime, e_ab);
        *out_value = value;
        *out_class = match Classification::of(value) {
            Classification::Local => VsClassification::Local,
            Classification::QuantumAttainable => VsClassification::QuantumAttainable,
            Classification::SuperQuantum => VsClassification::SuperQuantum,
        };
        Ok(())
    })
}

/// Singlet correlation `-a·b` for two unit 3-vectors.
///
/// # Safety
/// `a` and `b` must point to 3 doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_singlet_expectation(a: *const f64, b: *const f64, out: *mut f64) -> VsStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return Err(null("a/b/out"));
        }
        let read = |p: *const f64| -> Result<MeasurementDirection, VsStatus> {
            let v = std::slice::from_raw_parts(p, 3);
            MeasurementDirection::new([v[0], v[1], v[2]]).map_err(fail)
        };
        *out = singlet_expectation(&read(a)?, &read(b)?);
        Ok(())
    })
}

/// Builds a superposition state from `len` amplitudes (`re[i] + i*im[i]`).
/// `len` must be 11. `im` may be NULL for real amplitudes.
///
/// # Safety
/// `re` (and `im` when non-NULL) must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn vs_state_new(
    re: *const f64,
    im: *const f64,
    len: usize,
    normalize: bool,
    out: *mut *mut VsState,
) -> VsStatus {
    guard(|| {
        if re.is_null() || out.is_null() {
            return Err(null("re/out"));
        }
        let re = std::slice::from_raw_parts(re, len);
        let amps: Vec<Complex64> = if im.is_null() {
            re.iter().map(|&r| Complex64::new(r, 0.0)).collect()
        } else {
            let im = std::slice::from_raw_parts(im, len);
            re.iter().zip(im).map(|(&r, &i)| Complex64::new(r, i)).collect()
        };
        let state = make_state(&amps, normalize).map_err(fail)?;
        *out = Box::into_raw(Box::new(VsState(state)));
        Ok(())
    })
}

/// # Safety
/// `state` must come from `vs_state_new` and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vs_state_free(state: *mut VsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Born weight of split `x` (liters on the left, 0..=10).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_state_probability(state: *const VsState, x: usize, out: *mut f64) -> VsStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let probs = s.0.probabilities();
        let p = probs.get(x).ok_or_else(|| {
            set_last_error(format!("split index {x} out of range 0..=10"));
            VsStatus::DomainError
        })?;
        *out = *p;
        Ok(())
    })
}

/// One Born-rule sample; writes the liters collected on the left.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_state_born_sample(state: *const VsState, seed: u64, out_x: *mut u8) -> VsStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        if out_x.is_null() {
            return Err(null("out_x"));
        }
        *out_x = born_sample(&s.0, seed).x;
        Ok(())
    })
}

/// Number of Schmidt coefficients above `tol`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn vs_state_schmidt_rank(state: *const VsState, tol: f64, out: *mut usize) -> VsStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = schmidt_rank(&s.0, tol).map_err(fail)?;
        Ok(())
    })
}
