//! C ABI for `adacusum`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! style constructors and released with the matching `*_free`. Every fallible
//! call returns an [`AdacusumStatus`]; on failure a human-readable message is
//! available from [`adacusum_last_error_message`] on the same thread.
//! Results are written through caller-provided out pointers only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use adacusum::critical::{kolmogorov_cdf, kolmogorov_quantile, mc_quantile, TableEntry};
use adacusum::{
    adaptive_estimate, adaptive_test, argmax_estimator, cusum_profile, weighted_statistic,
    CriticalValueProvenance, CriticalValueTable, Error, GCurve, QuantileSource, TimeSeries,
    WeightExponent, Workers,
};

/// Status codes. Values 2 through 7 match the exit codes of the `adacusum`
/// command line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdacusumStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    DegenerateVariance = 3,
    Configuration = 4,
    MissingQuantile = 6,
    Io = 7,
    Panic = 100,
}

/// A validated series of at least two finite observations.
pub struct AdacusumSeries(TimeSeries);

/// A g-curve mapping a preliminary change location to a weight exponent.
pub struct AdacusumCurve(GCurve);

/// A table of simulated critical values.
pub struct AdacusumTable(CriticalValueTable);

/// Argmax change-point estimate at a fixed weight exponent.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AdacusumEstimate {
    /// Estimated last pre-change index, in `1..n-1`.
    pub m_hat: usize,
    pub tau_hat: f64,
    /// Maximum of the weighted CUSUM profile.
    pub statistic: f64,
    pub gamma: f64,
}

/// Result of the plug-in estimator.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AdacusumAdaptiveEstimate {
    /// Rescaled argmax at gamma = 1/2.
    pub tau_prelim: f64,
    pub gamma_hat: f64,
    pub m_hat: usize,
    pub tau_hat: f64,
    /// Weighted statistic at `gamma_hat`, divided by the sample standard
    /// deviation when studentized.
    pub statistic: f64,
    pub studentized: bool,
}

/// One simulated critical value.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct AdacusumTableEntry {
    pub gamma: f64,
    pub n: usize,
    /// Quantile level, e.g. 0.95.
    pub level: f64,
    pub value: f64,
    pub stderr: f64,
    pub replications: usize,
    pub seed: u64,
}

impl From<&TableEntry> for AdacusumTableEntry {
    fn from(e: &TableEntry) -> Self {
        Self {
            gamma: e.gamma,
            n: e.n,
            level: e.alpha,
            value: e.value,
            stderr: e.stderr,
            replications: e.replications,
            seed: e.seed,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdacusumQuantileSource {
    Kolmogorov = 0,
    Table = 1,
}

/// Outcome of the adaptive test.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AdacusumTestDecision {
    pub statistic: f64,
    pub critical_value: f64,
    /// Significance level the test was run at.
    pub alpha: f64,
    pub reject: bool,
    pub gamma_hat: f64,
    pub source: AdacusumQuantileSource,
    /// Table entry used; zeroed for the Kolmogorov source.
    pub entry: AdacusumTableEntry,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> AdacusumStatus {
    match e {
        Error::InvalidInput(_)
        | Error::Domain(_)
        | Error::Parse { .. }
        | Error::Manifest { .. } => AdacusumStatus::InvalidInput,
        Error::DegenerateVariance => AdacusumStatus::DegenerateVariance,
        Error::Config(_) => AdacusumStatus::Configuration,
        Error::MissingQuantile { .. } => AdacusumStatus::MissingQuantile,
        Error::Io { .. } => AdacusumStatus::Io,
    }
}

struct Failure(AdacusumStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AdacusumStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and last-error message.
fn guard<F>(f: F) -> AdacusumStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AdacusumStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {message}"));
            AdacusumStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    unsafe { ptr.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    unsafe { out.write(value) };
    Ok(())
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(unsafe { std::slice::from_raw_parts(ptr, len) })
}

unsafe fn c_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| {
        Failure(
            AdacusumStatus::InvalidInput,
            format!("{what} is not valid UTF-8"),
        )
    })
}

fn exponent(gamma: f64) -> Result<WeightExponent, Failure> {
    Ok(WeightExponent::new(gamma)?)
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

static VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn adacusum_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Message for the most recent failed call on this thread, or NULL.
///
/// The pointer stays valid until the next fallible call on the same thread.
#[no_mangle]
pub extern "C" fn adacusum_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Copies `len` values into a new series handle.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_series_new(
    values: *const f64,
    len: usize,
    out: *mut *mut AdacusumSeries,
) -> AdacusumStatus {
    guard(|| {
        let v = unsafe { slice(values, len, "values") }?;
        let series = TimeSeries::from_slice(v)?;
        unsafe { write_out(out, boxed(AdacusumSeries(series))) }
    })
}

/// # Safety
/// `series` must be NULL or a handle from [`adacusum_series_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn adacusum_series_free(series: *mut AdacusumSeries) {
    if !series.is_null() {
        drop(unsafe { Box::from_raw(series) });
    }
}

/// Number of observations, or 0 for a NULL handle.
///
/// # Safety
/// `series` must be NULL or a live series handle.
#[no_mangle]
pub unsafe extern "C" fn adacusum_series_len(series: *const AdacusumSeries) -> usize {
    unsafe { series.as_ref() }.map_or(0, |s| s.0.len())
}

/// Builtin curve by name: `i`, `ii`, `iii`, `iv`, `v`, `vi` or `tent`.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_curve_builtin(
    name: *const c_char,
    out: *mut *mut AdacusumCurve,
) -> AdacusumStatus {
    guard(|| {
        let name = unsafe { c_str(name, "name") }?;
        let curve: GCurve = name.parse()?;
        unsafe { write_out(out, boxed(AdacusumCurve(curve))) }
    })
}

/// Piecewise-linear curve through `(xs[i], gs[i])`; `xs` must start at 0,
/// end at 1 and increase strictly, `gs` must lie in `[0, 0.5]`.
///
/// # Safety
/// `xs` and `gs` must each point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_curve_from_knots(
    xs: *const f64,
    gs: *const f64,
    len: usize,
    out: *mut *mut AdacusumCurve,
) -> AdacusumStatus {
    guard(|| {
        let xs = unsafe { slice(xs, len, "xs") }?;
        let gs = unsafe { slice(gs, len, "gs") }?;
        let curve = GCurve::custom(xs.iter().copied().zip(gs.iter().copied()).collect())?;
        unsafe { write_out(out, boxed(AdacusumCurve(curve))) }
    })
}

/// # Safety
/// `curve` must be NULL or a live curve handle.
#[no_mangle]
pub unsafe extern "C" fn adacusum_curve_free(curve: *mut AdacusumCurve) {
    if !curve.is_null() {
        drop(unsafe { Box::from_raw(curve) });
    }
}

/// Evaluates the curve at `x` in `[0, 1]`.
///
/// # Safety
/// `curve` must be a live curve handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_curve_eval(
    curve: *const AdacusumCurve,
    x: f64,
    out: *mut f64,
) -> AdacusumStatus {
    guard(|| {
        let c = unsafe { deref(curve, "curve") }?;
        let g = c.0.eval(x)?;
        unsafe { write_out(out, g) }
    })
}

/// True when g(0) = g(1) = 0, i.e. the Kolmogorov quantile applies.
///
/// # Safety
/// `curve` must be NULL or a live curve handle.
#[no_mangle]
pub unsafe extern "C" fn adacusum_curve_is_h0_compatible(curve: *const AdacusumCurve) -> bool {
    unsafe { curve.as_ref() }.is_some_and(|c| c.0.h0_compatible())
}

/// Argmax estimator of the weighted CUSUM at a fixed `gamma` in `[0, 0.5]`.
///
/// # Safety
/// `series` must be a live series handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_estimate(
    series: *const AdacusumSeries,
    gamma: f64,
    out: *mut AdacusumEstimate,
) -> AdacusumStatus {
    guard(|| {
        let s = unsafe { deref(series, "series") }?;
        let est = argmax_estimator(&cusum_profile(&s.0), exponent(gamma)?);
        unsafe {
            write_out(
                out,
                AdacusumEstimate {
                    m_hat: est.m_hat,
                    tau_hat: est.tau_hat,
                    statistic: est.statistic,
                    gamma: est.gamma.value(),
                },
            )
        }
    })
}

/// Weighted CUSUM statistic `T_n(gamma)` (not studentized).
///
/// # Safety
/// `series` must be a live series handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_weighted_statistic(
    series: *const AdacusumSeries,
    gamma: f64,
    out: *mut f64,
) -> AdacusumStatus {
    guard(|| {
        let s = unsafe { deref(series, "series") }?;
        let t = weighted_statistic(&cusum_profile(&s.0), exponent(gamma)?);
        unsafe { write_out(out, t) }
    })
}

/// Plug-in estimator: preliminary location at gamma = 1/2, exponent from the
/// curve, then the argmax at that exponent.
///
/// # Safety
/// `series` and `curve` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_adaptive_estimate(
    series: *const AdacusumSeries,
    curve: *const AdacusumCurve,
    studentize: bool,
    out: *mut AdacusumAdaptiveEstimate,
) -> AdacusumStatus {
    guard(|| {
        let s = unsafe { deref(series, "series") }?;
        let c = unsafe { deref(curve, "curve") }?;
        let r = adaptive_estimate(&s.0, &c.0, studentize)?;
        unsafe {
            write_out(
                out,
                AdacusumAdaptiveEstimate {
                    tau_prelim: r.tau_prelim,
                    gamma_hat: r.gamma_hat.value(),
                    m_hat: r.estimate.m_hat,
                    tau_hat: r.estimate.tau_hat,
                    statistic: r.t_adaptive,
                    studentized: r.studentized,
                },
            )
        }
    })
}

/// CDF of the supremum of a standard Brownian bridge.
#[no_mangle]
pub extern "C" fn adacusum_kolmogorov_cdf(x: f64) -> f64 {
    kolmogorov_cdf(x)
}

/// Quantile of the Kolmogorov distribution at `level` in `(0, 1)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_kolmogorov_quantile(level: f64, out: *mut f64) -> AdacusumStatus {
    guard(|| {
        let q = kolmogorov_quantile(level)?.value;
        unsafe { write_out(out, q) }
    })
}

/// Simulated critical value of the studentized statistic under Gaussian
/// noise. `workers == 0` uses every core; the result does not depend on it.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_mc_quantile(
    gamma: f64,
    n: usize,
    level: f64,
    replications: usize,
    seed: u64,
    workers: usize,
    out: *mut AdacusumTableEntry,
) -> AdacusumStatus {
    guard(|| {
        let workers = if workers == 0 {
            Workers::AUTO
        } else {
            Workers(Some(workers))
        };
        let e = mc_quantile(exponent(gamma)?, n, level, replications, seed, workers)?;
        unsafe { write_out(out, AdacusumTableEntry::from(&e)) }
    })
}

/// Loads a critical-value table written by `adacusum quantile`.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_table_load(
    path: *const c_char,
    out: *mut *mut AdacusumTable,
) -> AdacusumStatus {
    guard(|| {
        let path = unsafe { c_str(path, "path") }?;
        let table = CriticalValueTable::load(Path::new(path))?;
        unsafe { write_out(out, boxed(AdacusumTable(table))) }
    })
}

/// # Safety
/// `table` must be NULL or a live table handle.
#[no_mangle]
pub unsafe extern "C" fn adacusum_table_free(table: *mut AdacusumTable) {
    if !table.is_null() {
        drop(unsafe { Box::from_raw(table) });
    }
}

/// Entry at the nearest tabulated gamma (ties toward the larger gamma) with
/// exactly matching `n` and `level`.
///
/// # Safety
/// `table` must be a live table handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_table_lookup(
    table: *const AdacusumTable,
    gamma: f64,
    n: usize,
    level: f64,
    out: *mut AdacusumTableEntry,
) -> AdacusumStatus {
    guard(|| {
        let t = unsafe { deref(table, "table") }?;
        let e = t.0.lookup(gamma, n, level)?;
        unsafe { write_out(out, AdacusumTableEntry::from(e)) }
    })
}

/// Adaptive weighted CUSUM test at significance `alpha`. A NULL `table`
/// selects the Kolmogorov quantile, which requires g(0) = g(1) = 0.
///
/// # Safety
/// `series` and `curve` must be live handles, `table` NULL or live, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn adacusum_adaptive_test(
    series: *const AdacusumSeries,
    curve: *const AdacusumCurve,
    alpha: f64,
    table: *const AdacusumTable,
    out: *mut AdacusumTestDecision,
) -> AdacusumStatus {
    guard(|| {
        let s = unsafe { deref(series, "series") }?;
        let c = unsafe { deref(curve, "curve") }?;
        let source = match unsafe { table.as_ref() } {
            Some(t) => QuantileSource::Table(&t.0),
            None => QuantileSource::Kolmogorov,
        };
        let d = adaptive_test(&s.0, &c.0, alpha, source)?;
        let (source, entry) = match d.source {
            CriticalValueProvenance::Kolmogorov { .. } => (
                AdacusumQuantileSource::Kolmogorov,
                AdacusumTableEntry::default(),
            ),
            CriticalValueProvenance::Table {
                gamma, n, level, ..
            } => {
                let t = unsafe { deref(table, "table") }?;
                let e =
                    t.0.get(gamma, n, level)
                        .expect("provenance names a stored entry");
                (AdacusumQuantileSource::Table, AdacusumTableEntry::from(e))
            }
        };
        unsafe {
            write_out(
                out,
                AdacusumTestDecision {
                    statistic: d.statistic,
                    critical_value: d.critical_value,
                    alpha: d.alpha,
                    reject: d.reject,
                    gamma_hat: d.gamma_hat.value(),
                    source,
                    entry,
                },
            )
        }
    })
}
