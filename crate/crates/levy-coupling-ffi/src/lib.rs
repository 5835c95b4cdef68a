//! C ABI over the levy-coupling library.
//!
//! Conventions:
//!
//! * Objects cross the boundary as opaque pointers created by `lc_*_from_*`
//!   or `lc_*_build` constructors and released by the matching `lc_*_free`.
//! * Every fallible call returns an [`LcStatus`]; outputs land in caller
//!   pointers only on `Ok`.
//! * On failure a thread-local message is set; fetch it with
//!   [`lc_last_error`]. The message lives until the next failure on the same
//!   thread.
//! * Strings returned by the library (`char*` outputs) are NUL-terminated
//!   UTF-8 and must be released with [`lc_string_free`].
//! * All functions are panic-safe: a caught panic returns
//!   [`LcStatus::Panic`] instead of unwinding across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use levy_coupling::bounds;
use levy_coupling::criteria::{decide_coupling_property, LevyTriplet, TripletJson, Verdict};
use levy_coupling::measure::{GridMismatch, MeasureJson, MixedMeasure, Point};
use levy_coupling::semigroup::SemigroupSeries;
use levy_coupling::Error;

/// Status of an FFI call. Nonzero values mirror the CLI exit-code taxonomy
/// where one exists.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LcStatus {
    Ok = 0,
    /// Input text could not be parsed.
    ParseError = 1,
    /// Input parsed but violates an invariant, or a pointer argument is
    /// invalid.
    InvalidInput = 2,
    /// Computation stopped by its work budget.
    BudgetExceeded = 5,
    /// Coupled step construction has no overlap to work with.
    DegenerateOverlap = 6,
    /// Not enough usable data points.
    InsufficientData = 7,
    /// A required pointer argument was NULL.
    NullArgument = 8,
    /// Internal panic; state is unchanged but the call did nothing.
    Panic = 9,
}

/// Verdict codes returned by [`lc_decide_coupling`], matching the CLI exit
/// codes for the `check` subcommand.
pub const LC_VERDICT_COUPLING: i32 = 0;
pub const LC_VERDICT_NO_COUPLING: i32 = 3;
pub const LC_VERDICT_INCONCLUSIVE: i32 = 4;

/// Finite measure handle (atoms plus lattice density).
pub struct LcMeasure(MixedMeasure);

/// Process triplet handle.
pub struct LcTriplet(LevyTriplet);

/// Evaluated transition-law series handle.
pub struct LcSeries(SemigroupSeries);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let sanitized: Vec<u8> = message
        .bytes()
        .map(|b| if b == 0 { b' ' } else { b })
        .collect();
    let cstring = CString::new(sanitized).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn status_of(err: &Error) -> LcStatus {
    match err {
        Error::Json(_) | Error::Io(_) => LcStatus::ParseError,
        Error::BudgetExceeded { .. } => LcStatus::BudgetExceeded,
        Error::DegenerateOverlap => LcStatus::DegenerateOverlap,
        Error::InsufficientData(_) => LcStatus::InsufficientData,
        _ => LcStatus::InvalidInput,
    }
}

fn fail_with(err: Error) -> LcStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

fn fail_invalid(message: &str) -> LcStatus {
    set_error(message);
    LcStatus::InvalidInput
}

fn fail_null(name: &str) -> LcStatus {
    set_error(&format!("argument {name} must not be NULL"));
    LcStatus::NullArgument
}

/// Runs `body` with panics converted to [`LcStatus::Panic`].
fn guarded(body: impl FnOnce() -> LcStatus) -> LcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            LcStatus::Panic
        }
    }
}

/// Copies the current thread's last error message into `buf` (truncated to
/// `cap - 1` bytes, always NUL-terminated when `cap > 0`). Returns the full
/// message length in bytes excluding the NUL; 0 means no error is recorded.
///
/// # Safety
/// `buf` must point to `cap` writable bytes, or be NULL (then only the
/// required length is returned).
#[no_mangle]
pub unsafe extern "C" fn lc_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let borrow = slot.borrow();
        let Some(msg) = borrow.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must have been returned by a function of this library and not freed
/// before.
#[no_mangle]
pub unsafe extern "C" fn lc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, LcStatus> {
    if p.is_null() {
        return Err(fail_null("string"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        LcStatus::ParseError
    })
}

unsafe fn read_point(p: *const f64, dim: usize, name: &str) -> Result<Point, LcStatus> {
    if p.is_null() {
        return Err(fail_null(name));
    }
    if dim == 0 {
        return Err(fail_invalid("dimension must be positive"));
    }
    let coords = std::slice::from_raw_parts(p, dim).to_vec();
    Point::new(coords).map_err(fail_with)
}

fn write_out<T>(out: *mut T, value: T, name: &str) -> LcStatus {
    if out.is_null() {
        return fail_null(name);
    }
    unsafe { out.write(value) };
    LcStatus::Ok
}

fn into_c_string(text: String) -> *mut c_char {
    let sanitized: Vec<u8> = text
        .bytes()
        .map(|b| if b == 0 { b' ' } else { b })
        .collect();
    CString::new(sanitized).unwrap_or_default().into_raw()
}

// ---------------------------------------------------------------------------
// Measures

/// Parses a measure from its JSON form (`dim`, optional `atoms`, optional
/// `density`). On success `*out` owns the new handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_measure_from_json(
    json: *const c_char,
    out: *mut *mut LcMeasure,
) -> LcStatus {
    guarded(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let parsed: MeasureJson = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => {
                set_error(&format!("cannot parse measure JSON: {e}"));
                return LcStatus::ParseError;
            }
        };
        match MixedMeasure::try_from(parsed) {
            Ok(m) => write_out(out, Box::into_raw(Box::new(LcMeasure(m))), "out"),
            Err(e) => fail_with(e),
        }
    })
}

/// Serializes a measure back to JSON. The string must be released with
/// [`lc_string_free`].
///
/// # Safety
/// `measure` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_measure_to_json(
    measure: *const LcMeasure,
    out: *mut *mut c_char,
) -> LcStatus {
    guarded(|| {
        let Some(m) = measure.as_ref() else {
            return fail_null("measure");
        };
        let json = MeasureJson::from(m.0.clone());
        match serde_json::to_string(&json) {
            Ok(text) => write_out(out, into_c_string(text), "out"),
            Err(e) => {
                set_error(&format!("cannot serialize measure: {e}"));
                LcStatus::InvalidInput
            }
        }
    })
}

/// Releases a measure handle. NULL is ignored.
///
/// # Safety
/// `measure` must be a live handle from this library or NULL.
#[no_mangle]
pub unsafe extern "C" fn lc_measure_free(measure: *mut LcMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// Total mass of the measure.
///
/// # Safety
/// `measure` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_measure_total_mass(
    measure: *const LcMeasure,
    out: *mut f64,
) -> LcStatus {
    guarded(|| {
        let Some(m) = measure.as_ref() else {
            return fail_null("measure");
        };
        write_out(out, m.0.total_mass(), "out")
    })
}

/// Total variation distance between two measures. Density parts on
/// incompatible lattices are treated as mutually singular.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_measure_tv(
    a: *const LcMeasure,
    b: *const LcMeasure,
    out: *mut f64,
) -> LcStatus {
    guarded(|| {
        let (Some(a), Some(b)) = (a.as_ref(), b.as_ref()) else {
            return fail_null("measure");
        };
        match a.0.tv_distance_with(&b.0, GridMismatch::Disjoint) {
            Ok(tv) => write_out(out, tv, "out"),
            Err(e) => fail_with(e),
        }
    })
}

/// Mass of the greatest common lower bound (overlap) of two measures.
/// Density parts on incompatible lattices are treated as mutually singular.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_measure_meet_mass(
    a: *const LcMeasure,
    b: *const LcMeasure,
    out: *mut f64,
) -> LcStatus {
    guarded(|| {
        let (Some(a), Some(b)) = (a.as_ref(), b.as_ref()) else {
            return fail_null("measure");
        };
        match a.0.meet_with(&b.0, GridMismatch::Disjoint) {
            Ok(meet) => write_out(out, meet.total_mass(), "out"),
            Err(e) => fail_with(e),
        }
    })
}

/// Convolution of two measures into a new handle.
///
/// # Safety
/// `a` and `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_measure_convolve(
    a: *const LcMeasure,
    b: *const LcMeasure,
    out: *mut *mut LcMeasure,
) -> LcStatus {
    guarded(|| {
        let (Some(a), Some(b)) = (a.as_ref(), b.as_ref()) else {
            return fail_null("measure");
        };
        match a.0.convolve(&b.0) {
            Ok(m) => write_out(out, Box::into_raw(Box::new(LcMeasure(m))), "out"),
            Err(e) => fail_with(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Transition-law series

/// Evaluates the transition law of the compound jump process with the given
/// step law and jump rate at time `time`, truncating the jump-count series
/// so at most `tol` probability mass is dropped.
///
/// # Safety
/// `step_law` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_series_build(
    step_law: *const LcMeasure,
    rate: f64,
    time: f64,
    tol: f64,
    out: *mut *mut LcSeries,
) -> LcStatus {
    guarded(|| {
        let Some(law) = step_law.as_ref() else {
            return fail_null("step_law");
        };
        match SemigroupSeries::build(&law.0, rate, time, tol) {
            Ok(s) => write_out(out, Box::into_raw(Box::new(LcSeries(s))), "out"),
            Err(e) => fail_with(e),
        }
    })
}

/// Releases a series handle. NULL is ignored.
///
/// # Safety
/// `series` must be a live handle from this library or NULL.
#[no_mangle]
pub unsafe extern "C" fn lc_series_free(series: *mut LcSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of jump-count terms the series kept.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_series_order(series: *const LcSeries, out: *mut usize) -> LcStatus {
    guarded(|| {
        let Some(s) = series.as_ref() else {
            return fail_null("series");
        };
        write_out(out, s.0.order(), "out")
    })
}

/// Probability mass dropped by the truncation.
///
/// # Safety
/// `series` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_series_tail_mass(series: *const LcSeries, out: *mut f64) -> LcStatus {
    guarded(|| {
        let Some(s) = series.as_ref() else {
            return fail_null("series");
        };
        write_out(out, s.0.tail_mass(), "out")
    })
}

/// Total variation distance between the transition laws started at `x` and
/// `y` (each `dim` coordinates), as a certified interval.
///
/// # Safety
/// `series` must be a live handle; `x` and `y` must point to `dim` doubles;
/// the three output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_series_tv(
    series: *const LcSeries,
    x: *const f64,
    y: *const f64,
    dim: usize,
    out_lower: *mut f64,
    out_center: *mut f64,
    out_upper: *mut f64,
) -> LcStatus {
    guarded(|| {
        let Some(s) = series.as_ref() else {
            return fail_null("series");
        };
        let px = match read_point(x, dim, "x") {
            Ok(p) => p,
            Err(st) => return st,
        };
        let py = match read_point(y, dim, "y") {
            Ok(p) => p,
            Err(st) => return st,
        };
        match s.0.cp_tv(&px, &py) {
            Ok(tv) => {
                let st = write_out(out_lower, tv.lower, "out_lower");
                if st != LcStatus::Ok {
                    return st;
                }
                let st = write_out(out_center, tv.center, "out_center");
                if st != LcStatus::Ok {
                    return st;
                }
                write_out(out_upper, tv.upper, "out_upper")
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Series upper bound on the transition-law distance built from per-step
/// distances.
///
/// # Safety
/// `series` must be a live handle; `x` and `y` must point to `dim` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_series_tv_bound(
    series: *const LcSeries,
    x: *const f64,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> LcStatus {
    guarded(|| {
        let Some(s) = series.as_ref() else {
            return fail_null("series");
        };
        let px = match read_point(x, dim, "x") {
            Ok(p) => p,
            Err(st) => return st,
        };
        let py = match read_point(y, dim, "y") {
            Ok(p) => p,
            Err(st) => return st,
        };
        match s.0.series_tv_bound(&px, &py) {
            Ok(b) => write_out(out, b, "out"),
            Err(e) => fail_with(e),
        }
    })
}

// ---------------------------------------------------------------------------
// Criteria

/// Parses a process triplet from JSON. On success `*out` owns the handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_triplet_from_json(
    json: *const c_char,
    out: *mut *mut LcTriplet,
) -> LcStatus {
    guarded(|| {
        let text = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        let parsed: TripletJson = match serde_json::from_str(text) {
            Ok(p) => p,
            Err(e) => {
                set_error(&format!("cannot parse triplet JSON: {e}"));
                return LcStatus::ParseError;
            }
        };
        match LevyTriplet::try_from(parsed) {
            Ok(t) => write_out(out, Box::into_raw(Box::new(LcTriplet(t))), "out"),
            Err(e) => fail_with(e),
        }
    })
}

/// Releases a triplet handle. NULL is ignored.
///
/// # Safety
/// `triplet` must be a live handle from this library or NULL.
#[no_mangle]
pub unsafe extern "C" fn lc_triplet_free(triplet: *mut LcTriplet) {
    if !triplet.is_null() {
        drop(Box::from_raw(triplet));
    }
}

/// Decides the coupling property. `*out_verdict` receives
/// `LC_VERDICT_COUPLING`, `LC_VERDICT_NO_COUPLING`, or
/// `LC_VERDICT_INCONCLUSIVE`. When `out_report_json` is non-NULL it receives
/// the full report as JSON (release with [`lc_string_free`]).
///
/// # Safety
/// `triplet` must be a live handle; `out_verdict` must be writable;
/// `out_report_json` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn lc_decide_coupling(
    triplet: *const LcTriplet,
    search_depth: u32,
    out_verdict: *mut i32,
    out_report_json: *mut *mut c_char,
) -> LcStatus {
    guarded(|| {
        let Some(t) = triplet.as_ref() else {
            return fail_null("triplet");
        };
        let report = match decide_coupling_property(&t.0, search_depth) {
            Ok(r) => r,
            Err(e) => return fail_with(e),
        };
        let verdict = match report.verdict {
            Verdict::Coupling => LC_VERDICT_COUPLING,
            Verdict::NoCoupling => LC_VERDICT_NO_COUPLING,
            Verdict::Inconclusive => LC_VERDICT_INCONCLUSIVE,
        };
        if !out_report_json.is_null() {
            match serde_json::to_string(&report) {
                Ok(text) => out_report_json.write(into_c_string(text)),
                Err(e) => {
                    set_error(&format!("cannot serialize report: {e}"));
                    return LcStatus::InvalidInput;
                }
            }
        }
        write_out(out_verdict, verdict, "out_verdict")
    })
}

// ---------------------------------------------------------------------------
// Bounds

/// Square-root decay bound on the transition-law distance, capped at 2.
/// `c_xy` must dominate `sqrt(n)` times the n-step walk distance.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_couplingo2_bound(
    rate: f64,
    t: f64,
    c_xy: f64,
    x_equals_y: bool,
    out: *mut f64,
) -> LcStatus {
    guarded(
        || match bounds::couplingo2_bound(rate, t, c_xy, x_equals_y) {
            Ok(b) => write_out(out, b, "out"),
            Err(e) => fail_with(e),
        },
    )
}

/// Dimension-free decay bound `min(2, c * (1 + distance) / sqrt(t))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_th2_bound(t: f64, distance: f64, c: f64, out: *mut f64) -> LcStatus {
    guarded(|| {
        if !distance.is_finite() || distance < 0.0 {
            return fail_invalid("distance must be nonnegative and finite");
        }
        let x = Point::scalar(0.0);
        let y = Point::scalar(distance);
        match bounds::th2_bound(t, &x, &y, c) {
            Ok(b) => write_out(out, b, "out"),
            Err(e) => fail_with(e),
        }
    })
}

/// Both sides of the series comparison behind the square-root bound;
/// `lhs <= rhs` holds for every valid `(rate, t)`.
///
/// # Safety
/// `out_lhs` and `out_rhs` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_jensen_chain(
    rate: f64,
    t: f64,
    out_lhs: *mut f64,
    out_rhs: *mut f64,
) -> LcStatus {
    guarded(|| match bounds::jensen_chain_check(rate, t) {
        Ok((lhs, rhs)) => {
            let st = write_out(out_lhs, lhs, "out_lhs");
            if st != LcStatus::Ok {
                return st;
            }
            write_out(out_rhs, rhs, "out_rhs")
        }
        Err(e) => fail_with(e),
    })
}

/// Ordinary least squares power-law fit of `values ~ t^slope` on the log-log
/// scale. Values at or below 1e-13 are dropped; at least five surviving
/// points spanning two decades of `t` are required.
///
/// # Safety
/// `times` and `values` must point to `len` doubles each; the three output
/// pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn lc_fit_rate(
    times: *const f64,
    values: *const f64,
    len: usize,
    out_slope: *mut f64,
    out_intercept: *mut f64,
    out_r_squared: *mut f64,
) -> LcStatus {
    guarded(|| {
        if times.is_null() || values.is_null() {
            return fail_null("times/values");
        }
        let ts = std::slice::from_raw_parts(times, len);
        let vs = std::slice::from_raw_parts(values, len);
        match bounds::fit_rate(ts, vs) {
            Ok(fit) => {
                let st = write_out(out_slope, fit.slope, "out_slope");
                if st != LcStatus::Ok {
                    return st;
                }
                let st = write_out(out_intercept, fit.intercept, "out_intercept");
                if st != LcStatus::Ok {
                    return st;
                }
                write_out(out_r_squared, fit.r_squared, "out_r_squared")
            }
            Err(e) => fail_with(e),
        }
    })
}
