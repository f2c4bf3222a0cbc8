//! C ABI over `spde-core`.
//!
//! Studies and rate tables are opaque heap handles created by `*_parse` /
//! `*_run` and released with the matching `*_free`. Every fallible call
//! returns an [`SpdeStatus`]; on failure [`spde_last_error`] describes the
//! problem for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spde_core::{Estimator, Fit, RateTable, SpdeError, StudyOptions, StudySpec};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpdeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    Domain = 4,
    Diverged = 5,
    Io = 6,
    OutOfRange = 7,
    Unresolved = 8,
    Panic = 9,
}

/// Opaque study description.
pub struct SpdeStudy {
    spec: StudySpec,
}

/// Opaque result of a study.
pub struct SpdeRateTable {
    table: RateTable,
    csv: CString,
}

/// One ladder entry of a rate table.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpdeRateRow {
    pub resolution: usize,
    /// `1/N` (spatial) or the time step (temporal).
    pub measure: f64,
    pub strong_error: f64,
    pub strong_stderr: f64,
    pub weak_error: f64,
    pub weak_stderr: f64,
    pub n_samples: usize,
    pub n_diverged: usize,
}

/// Log-log least-squares fit.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpdeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn status_of(error: &SpdeError) -> SpdeStatus {
    match error {
        SpdeError::Config { .. } | SpdeError::ConfigSyntax(_) | SpdeError::ConfigEmit(_) => SpdeStatus::Config,
        SpdeError::Diverged { .. } => SpdeStatus::Diverged,
        SpdeError::Io { .. } => SpdeStatus::Io,
        SpdeError::ZeroMode(_) | SpdeError::ModeOutOfRange { .. } => SpdeStatus::OutOfRange,
        SpdeError::Fit { .. } => SpdeStatus::Unresolved,
        _ => SpdeStatus::Domain,
    }
}

fn fail(status: SpdeStatus, message: impl Into<String>) -> SpdeStatus {
    set_error(message);
    status
}

fn guard(body: impl FnOnce() -> Result<(), SpdeStatus>) -> SpdeStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SpdeStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(SpdeStatus::Panic, "internal panic"),
    }
}

fn lift<T>(result: spde_core::Result<T>) -> Result<T, SpdeStatus> {
    result.map_err(|e| fail(status_of(&e), e.to_string()))
}

unsafe fn borrow<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, SpdeStatus> {
    ptr.as_ref()
        .ok_or_else(|| fail(SpdeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn borrow_mut<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, SpdeStatus> {
    ptr.as_mut()
        .ok_or_else(|| fail(SpdeStatus::NullPointer, format!("{what} is null")))
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, SpdeStatus> {
    if ptr.is_null() {
        return Err(fail(SpdeStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| fail(SpdeStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn fit_out(fit: Option<Fit>, out: &mut SpdeFit) -> Result<(), SpdeStatus> {
    let fit = fit.ok_or_else(|| fail(SpdeStatus::Unresolved, "fewer than two rows above the noise floor"))?;
    *out = SpdeFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points: fit.points,
    };
    Ok(())
}

/// Message of the last failed call on this thread. Valid until the next
/// call into the library from the same thread; empty if none failed.
#[no_mangle]
pub extern "C" fn spde_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn spde_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Eigenvalue `(kπ)²` of the Dirichlet Laplacian, `k ≥ 1`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spde_eigenvalue(k: usize, out: *mut f64) -> SpdeStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        *out = lift(spde_core::eigenvalue(k))?;
        Ok(())
    })
}

/// Parses a TOML study description into a new handle.
///
/// # Safety
/// `toml` must be null or a NUL-terminated string; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spde_study_parse(toml: *const c_char, out: *mut *mut SpdeStudy) -> SpdeStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        *out = ptr::null_mut();
        let spec = lift(spde_core::parse_config(text(toml, "toml")?))?;
        *out = Box::into_raw(Box::new(SpdeStudy { spec }));
        Ok(())
    })
}

/// # Safety
/// `study` must be null or a live handle from [`spde_study_parse`].
#[no_mangle]
pub unsafe extern "C" fn spde_study_set_seed(study: *mut SpdeStudy, seed: u64) -> SpdeStatus {
    guard(|| {
        borrow_mut(study, "study")?.spec.master_seed = seed;
        Ok(())
    })
}

/// # Safety
/// `study` must be null or a live handle from [`spde_study_parse`].
#[no_mangle]
pub unsafe extern "C" fn spde_study_set_samples(study: *mut SpdeStudy, samples: usize) -> SpdeStatus {
    guard(|| {
        if samples == 0 {
            return Err(fail(SpdeStatus::Config, "samples must be positive"));
        }
        borrow_mut(study, "study")?.spec.samples = samples;
        Ok(())
    })
}

/// Runs the study. `workers == 0` uses every core; `independent != 0`
/// estimates weak errors from independent paths.
///
/// # Safety
/// `study` must be null or a live handle; `out` must be null or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn spde_study_run(
    study: *const SpdeStudy,
    workers: usize,
    independent: i32,
    out: *mut *mut SpdeRateTable,
) -> SpdeStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        *out = ptr::null_mut();
        let study = borrow(study, "study")?;
        let estimator = if independent != 0 {
            Estimator::Independent
        } else {
            Estimator::Coupled
        };
        let table = lift(spde_core::run_study(&study.spec, StudyOptions { workers, estimator }))?;
        let csv = CString::new(table.to_csv()).expect("CSV has no NUL");
        *out = Box::into_raw(Box::new(SpdeRateTable { table, csv }));
        Ok(())
    })
}

/// # Safety
/// `study` must be null or a handle from [`spde_study_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spde_study_free(study: *mut SpdeStudy) {
    if !study.is_null() {
        drop(Box::from_raw(study));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `table` must be null or a live handle from [`spde_study_run`].
#[no_mangle]
pub unsafe extern "C" fn spde_table_rows(table: *const SpdeRateTable) -> usize {
    table.as_ref().map_or(0, |t| t.table.rows.len())
}

/// # Safety
/// `table` must be null or a live handle; `out` must be null or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn spde_table_row(
    table: *const SpdeRateTable,
    index: usize,
    out: *mut SpdeRateRow,
) -> SpdeStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        let rows = &borrow(table, "table")?.table.rows;
        let r = rows
            .get(index)
            .ok_or_else(|| fail(SpdeStatus::OutOfRange, format!("row {index} of {}", rows.len())))?;
        *out = SpdeRateRow {
            resolution: r.resolution,
            measure: r.measure,
            strong_error: r.strong_error,
            strong_stderr: r.strong_stderr,
            weak_error: r.weak_error,
            weak_stderr: r.weak_stderr,
            n_samples: r.n_samples,
            n_diverged: r.n_diverged,
        };
        Ok(())
    })
}

/// Weak-error slope; `SPDE_STATUS_UNRESOLVED` when it cannot be fitted.
///
/// # Safety
/// `table` must be null or a live handle; `out` must be null or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn spde_table_weak_fit(table: *const SpdeRateTable, out: *mut SpdeFit) -> SpdeStatus {
    guard(|| fit_out(borrow(table, "table")?.table.fits.weak, borrow_mut(out, "out")?))
}

/// Strong-error slope; `SPDE_STATUS_UNRESOLVED` when it cannot be fitted.
///
/// # Safety
/// `table` must be null or a live handle; `out` must be null or valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn spde_table_strong_fit(table: *const SpdeRateTable, out: *mut SpdeFit) -> SpdeStatus {
    guard(|| fit_out(borrow(table, "table")?.table.fits.strong, borrow_mut(out, "out")?))
}

/// The table as CSV, owned by the handle.
///
/// # Safety
/// `table` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spde_table_csv(table: *const SpdeRateTable) -> *const c_char {
    table.as_ref().map_or(ptr::null(), |t| t.csv.as_ptr())
}

/// Writes the CSV to `path`.
///
/// # Safety
/// `table` must be null or a live handle; `path` must be null or a
/// NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn spde_table_write_csv(table: *const SpdeRateTable, path: *const c_char) -> SpdeStatus {
    guard(|| {
        let table = borrow(table, "table")?;
        let path = text(path, "path")?;
        std::fs::write(path, table.csv.as_bytes()).map_err(|e| fail(SpdeStatus::Io, format!("{path}: {e}")))
    })
}

/// # Safety
/// `table` must be null or a handle from [`spde_study_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn spde_table_free(table: *mut SpdeRateTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}
