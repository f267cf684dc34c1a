//! C ABI for the simulator core.
//!
//! Every fallible function returns a [`PsStatus`] and writes its result
//! through out-pointers, touched only on `PS_STATUS_OK`. Strings handed out
//! are NUL-terminated UTF-8 owned by the caller; release them with
//! [`ps_string_free`]. Scenario handles are opaque; release them with
//! [`ps_scenario_free`]. On failure a message is stored per thread and can
//! be read back with [`ps_last_error`].
//!
//! Particle indices are zero-based here, matching the core library. The JSON
//! payloads are byte-identical in layout to the CLI artifacts and keep their
//! one-based pair labels.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use pigeonsim::montecarlo::{compare_counts, run_ensemble, RunConfig};
use pigeonsim::pigeonhole::{
    build_scenario, correlation_pattern, pair_same_probability, scenario_from_parts,
    verify_general, Scenario,
};
use pigeonsim::prepost::{weak_value, MeasurementSpec};
use pigeonsim::qstate::{ProjectorSpec, RegisterShape, StateVector};
use pigeonsim::report::{
    deflection_report, general_report, oracle_report, pattern_report, OracleReportOut,
};
use pigeonsim::weakcoupling::deflection_scan;
use pigeonsim::{tol, SimError, C64};

/// Result of every fallible call. Nonzero values match the CLI exit codes
/// for the same error classes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PsStatus {
    /// The call succeeded and any out-pointers were written.
    Ok = 0,
    /// A defect inside the library (caught panic, failed serialization).
    Internal = 1,
    /// An argument or combination of arguments was rejected.
    InvalidInput = 2,
    /// No measurement outcome connects the pre- and post-selection.
    ImpossiblePostselection = 3,
    /// An input/output operation failed.
    Io = 4,
}

/// Opaque pre/post-selected register handle.
pub struct PsScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg)
        .unwrap_or_else(|_| CString::new("error message contained a NUL byte").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: PsStatus, msg: impl Into<String>) -> PsStatus {
    set_error(msg.into());
    status
}

fn fail_sim(e: SimError) -> PsStatus {
    let status = match e {
        SimError::ImpossiblePostselection(_) => PsStatus::ImpossiblePostselection,
        SimError::Io(_) => PsStatus::Io,
        _ => PsStatus::InvalidInput,
    };
    fail(status, e.to_string())
}

fn guarded(f: impl FnOnce() -> PsStatus) -> PsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(PsStatus::Internal, "internal error: unexpected panic"),
    }
}

/// Reborrow (ptr, len) as a slice; `None` flags a null pointer with a
/// nonzero length.
unsafe fn slice_arg<'a, T>(data: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if data.is_null() {
        None
    } else {
        Some(unsafe { slice::from_raw_parts(data, len) })
    }
}

unsafe fn write_json<T: serde::Serialize>(value: &T, out: *mut *mut c_char) -> PsStatus {
    let json = match serde_json::to_string_pretty(value) {
        Ok(j) => j,
        Err(e) => return fail(PsStatus::Internal, format!("serialization failed: {e}")),
    };
    match CString::new(json) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            PsStatus::Ok
        }
        Err(_) => fail(PsStatus::Internal, "JSON contained a NUL byte"),
    }
}

unsafe fn scenario_arg<'a>(s: *const PsScenario) -> Result<&'a Scenario, PsStatus> {
    if s.is_null() {
        Err(fail(PsStatus::InvalidInput, "scenario handle is null"))
    } else {
        Ok(unsafe { &(*s).inner })
    }
}

/// Message from the most recent failed call on this thread, or null if no
/// call has failed yet. The pointer stays valid until the next failed call
/// on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn ps_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned through a `char **` out
/// parameter of this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_string_free(s: *mut c_char) {
    if !s.is_null() {
        unsafe { drop(CString::from_raw(s)) };
    }
}

/// Build the canonical scenario: `num_particles` particles prepared in the
/// uniform superposition over `num_boxes` boxes, post-selected on the
/// fourier-basis element `outcome[p]` per particle. `outcome_len` must equal
/// `num_particles`.
///
/// # Safety
/// `outcome` must point to `outcome_len` readable elements and `out` must be
/// a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_new(
    num_particles: usize,
    num_boxes: usize,
    outcome: *const usize,
    outcome_len: usize,
    out: *mut *mut PsScenario,
) -> PsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(PsStatus::InvalidInput, "out pointer is null");
        }
        let Some(outcome) = (unsafe { slice_arg(outcome, outcome_len) }) else {
            return fail(PsStatus::InvalidInput, "outcome is null");
        };
        if outcome_len != num_particles {
            return fail(
                PsStatus::InvalidInput,
                format!("outcome has {outcome_len} entries for {num_particles} particles"),
            );
        }
        match build_scenario(num_particles, num_boxes, outcome) {
            Ok(sc) => {
                unsafe { *out = Box::into_raw(Box::new(PsScenario { inner: sc })) };
                PsStatus::Ok
            }
            Err(e) => fail_sim(e),
        }
    })
}

/// Build a scenario with explicit single-particle preparations. `amplitudes`
/// holds `outcome_len * num_boxes` complex numbers as interleaved
/// (re, im) doubles, particle-major: entry `2 * (p * num_boxes + k)` is the
/// real part of particle p's amplitude on box k. The post-selection is the
/// fourier-basis product selected by `outcome`, as in [`ps_scenario_new`].
///
/// # Safety
/// `outcome` must point to `outcome_len` readable elements, `amplitudes` to
/// `amplitudes_len` readable doubles, and `out` must be a valid writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_with_pre(
    num_boxes: usize,
    outcome: *const usize,
    outcome_len: usize,
    amplitudes: *const f64,
    amplitudes_len: usize,
    out: *mut *mut PsScenario,
) -> PsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(PsStatus::InvalidInput, "out pointer is null");
        }
        let Some(outcome) = (unsafe { slice_arg(outcome, outcome_len) }) else {
            return fail(PsStatus::InvalidInput, "outcome is null");
        };
        let Some(amps) = (unsafe { slice_arg(amplitudes, amplitudes_len) }) else {
            return fail(PsStatus::InvalidInput, "amplitudes is null");
        };
        let expected = outcome_len
            .checked_mul(num_boxes)
            .and_then(|n| n.checked_mul(2));
        if expected != Some(amps.len()) {
            return fail(
                PsStatus::InvalidInput,
                format!(
                    "amplitudes has {} doubles, expected outcome_len * num_boxes * 2 = {}",
                    amps.len(),
                    expected.map_or("overflow".into(), |n: usize| n.to_string()),
                ),
            );
        }
        let build = || -> Result<Scenario, SimError> {
            let shape = RegisterShape::new(1, num_boxes)?;
            let parts = amps
                .chunks_exact(2 * num_boxes)
                .map(|chunk| {
                    let vec = chunk
                        .chunks_exact(2)
                        .map(|pair| C64::new(pair[0], pair[1]))
                        .collect();
                    StateVector::from_amplitudes(shape, vec)
                })
                .collect::<Result<Vec<_>, _>>()?;
            scenario_from_parts(parts, num_boxes, outcome, tol::DEFAULT_DIM_CAP)
        };
        match build() {
            Ok(sc) => {
                unsafe { *out = Box::into_raw(Box::new(PsScenario { inner: sc })) };
                PsStatus::Ok
            }
            Err(e) => fail_sim(e),
        }
    })
}

/// Release a scenario handle. Null is a no-op.
///
/// # Safety
/// `s` must come from a scenario constructor of this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ps_scenario_free(s: *mut PsScenario) {
    if !s.is_null() {
        unsafe { drop(Box::from_raw(s)) };
    }
}

/// Write the full pair-correlation report for a scenario as JSON, matching
/// the `pattern` CLI command.
///
/// # Safety
/// `s` must be a live scenario handle and `out_json` a valid writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_pattern_json(
    s: *const PsScenario,
    out_json: *mut *mut c_char,
) -> PsStatus {
    guarded(|| {
        if out_json.is_null() {
            return fail(PsStatus::InvalidInput, "out pointer is null");
        }
        let sc = match unsafe { scenario_arg(s) } {
            Ok(sc) => sc,
            Err(status) => return status,
        };
        match correlation_pattern(sc) {
            Ok(pattern) => unsafe { write_json(&pattern_report(sc, &pattern), out_json) },
            Err(e) => fail_sim(e),
        }
    })
}

/// Write the conditional probability that particles `i` and `j` (zero-based,
/// distinct) occupy the same box, given both selections.
///
/// # Safety
/// `s` must be a live scenario handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_pair_same_probability(
    s: *const PsScenario,
    i: usize,
    j: usize,
    out: *mut f64,
) -> PsStatus {
    guarded(|| {
        if out.is_null() {
            return fail(PsStatus::InvalidInput, "out pointer is null");
        }
        let sc = match unsafe { scenario_arg(s) } {
            Ok(sc) => sc,
            Err(status) => return status,
        };
        match pair_same_probability(sc, i, j) {
            Ok(p) => {
                unsafe { *out = p };
                PsStatus::Ok
            }
            Err(e) => fail_sim(e),
        }
    })
}

/// Write the weak value of the same-box projector for particles `i` and `j`
/// (zero-based, distinct) as a complex number.
///
/// # Safety
/// `s` must be a live scenario handle; `out_re` and `out_im` must be valid
/// writable pointers.
#[no_mangle]
pub unsafe extern "C" fn ps_weak_value(
    s: *const PsScenario,
    i: usize,
    j: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> PsStatus {
    guarded(|| {
        if out_re.is_null() || out_im.is_null() {
            return fail(PsStatus::InvalidInput, "out pointer is null");
        }
        let sc = match unsafe { scenario_arg(s) } {
            Ok(sc) => sc,
            Err(status) => return status,
        };
        let compute = || -> Result<C64, SimError> {
            let op = ProjectorSpec::same_pair(sc.shape(), i, j)?;
            weak_value(&sc.ensemble()?, &op)
        };
        match compute() {
            Ok(w) => {
                unsafe {
                    *out_re = w.re;
                    *out_im = w.im;
                }
                PsStatus::Ok
            }
            Err(e) => fail_sim(e),
        }
    })
}

/// Run the N-particle, M-box generalization check and write its report as
/// JSON, matching one row of the `general` CLI command.
///
/// # Safety
/// `out_json` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_general_json(
    num_particles: usize,
    num_boxes: usize,
    out_json: *mut *mut c_char,
) -> PsStatus {
    guarded(|| {
        if out_json.is_null() {
            return fail(PsStatus::InvalidInput, "out pointer is null");
        }
        match verify_general(num_particles, num_boxes) {
            Ok(report) => unsafe { write_json(&general_report(&report), out_json) },
            Err(e) => fail_sim(e),
        }
    })
}

/// Sample repeated runs with a same-or-different measurement on the pair
/// (`pair_i`, `pair_j`) between the selections, compare the counts against
/// exact enumeration, and write the comparison as JSON, matching the
/// `montecarlo` CLI command's oracle artifact.
///
/// # Safety
/// `s` must be a live scenario handle and `out_json` a valid writable
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_montecarlo_json(
    s: *const PsScenario,
    pair_i: usize,
    pair_j: usize,
    samples: u64,
    seed: u64,
    out_json: *mut *mut c_char,
) -> PsStatus {
    guarded(|| {
        if out_json.is_null() {
            return fail(PsStatus::InvalidInput, "out pointer is null");
        }
        let sc = match unsafe { scenario_arg(s) } {
            Ok(sc) => sc,
            Err(status) => return status,
        };
        let run = || -> Result<OracleReportOut, SimError> {
            let cfg = RunConfig {
                scenario: sc.clone(),
                intermediate: vec![MeasurementSpec::same_diff(sc.shape(), pair_i, pair_j)?],
                samples,
                seed,
            };
            let table = run_ensemble(&cfg)?;
            let cmp = compare_counts(&cfg, &table)?;
            Ok(oracle_report(&cfg, &cmp))
        };
        match run() {
            Ok(report) => unsafe { write_json(&report, out_json) },
            Err(e) => fail_sim(e),
        }
    })
}

/// Scan mean pointer shifts over `lambdas` with pointer width `sigma` and
/// write the fitted log-log slopes as JSON, matching the `deflection` CLI
/// command's slope artifact. With `postselected` false the scan traces out
/// the final measurement instead of conditioning on it.
///
/// # Safety
/// `s` must be a live scenario handle, `lambdas` must point to `lambdas_len`
/// readable doubles, and `out_json` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ps_deflection_json(
    s: *const PsScenario,
    lambdas: *const f64,
    lambdas_len: usize,
    sigma: f64,
    postselected: bool,
    out_json: *mut *mut c_char,
) -> PsStatus {
    guarded(|| {
        if out_json.is_null() {
            return fail(PsStatus::InvalidInput, "out pointer is null");
        }
        let sc = match unsafe { scenario_arg(s) } {
            Ok(sc) => sc,
            Err(status) => return status,
        };
        let Some(lambdas) = (unsafe { slice_arg(lambdas, lambdas_len) }) else {
            return fail(PsStatus::InvalidInput, "lambdas is null");
        };
        let post = if postselected { Some(sc.post()) } else { None };
        match deflection_scan(sc.pre(), post, lambdas, sigma) {
            Ok(scan) => unsafe { write_json(&deflection_report(&scan), out_json) },
            Err(e) => fail_sim(e),
        }
    })
}
