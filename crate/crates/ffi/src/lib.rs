//! C interface to the copula discrepancy library.
//!
//! Every fallible function returns a [`CdStatus`]; on failure a description
//! is available from [`cd_last_error_message`] on the same thread. Samples
//! live behind the opaque [`CdSample`] handle and must be released with
//! [`cd_sample_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use copula_discrepancy::{
    copula, discrepancy, ranks, BivariateSample, CopulaFamily, CopulaModel, Error, Estimator,
};

pub const CD_FAMILY_GUMBEL: u32 = 0;
pub const CD_FAMILY_CLAYTON: u32 = 1;

pub const CD_ESTIMATOR_MOMENT: u32 = 0;
pub const CD_ESTIMATOR_MLE: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NumericalError = 4,
    Panic = 5,
}

/// Opaque sample handle.
pub struct CdSample {
    inner: BivariateSample,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CdReport {
    pub estimator: u32,
    pub theta_p: f64,
    pub tau_p: f64,
    pub theta_hat: f64,
    pub tau_hat: f64,
    pub tau_hat_model: f64,
    pub cd: f64,
    pub n: usize,
    pub wall_time_s: f64,
    pub degenerate: bool,
    pub boundary: bool,
    /// NaN for the moment estimator.
    pub log_likelihood: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct CdTestResult {
    pub t_statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub critical_value: f64,
    pub sigma_tau_hat: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> CdStatus {
    match err.exit_code() {
        1 => CdStatus::InvalidArgument,
        2 => CdStatus::DataError,
        _ => CdStatus::NumericalError,
    }
}

/// Runs `f`, recording errors and converting panics into `CdStatus::Panic`.
fn guard<F>(f: F) -> CdStatus
where
    F: FnOnce() -> Result<(), (CdStatus, String)>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CdStatus::Panic
        }
    }
}

fn lib<T>(r: Result<T, Error>) -> Result<T, (CdStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CdStatus, String) {
    (CdStatus::NullPointer, format!("{what} is NULL"))
}

fn family(code: u32) -> Result<CopulaFamily, (CdStatus, String)> {
    match code {
        CD_FAMILY_GUMBEL => Ok(CopulaFamily::Gumbel),
        CD_FAMILY_CLAYTON => Ok(CopulaFamily::Clayton),
        other => Err((
            CdStatus::InvalidArgument,
            format!("unknown family code {other}"),
        )),
    }
}

fn estimator(code: u32) -> Result<Estimator, (CdStatus, String)> {
    match code {
        CD_ESTIMATOR_MOMENT => Ok(Estimator::Moment),
        CD_ESTIMATOR_MLE => Ok(Estimator::Mle),
        other => Err((
            CdStatus::InvalidArgument,
            format!("unknown estimator code {other}"),
        )),
    }
}

unsafe fn sample_ref<'a>(
    sample: *const CdSample,
) -> Result<&'a BivariateSample, (CdStatus, String)> {
    sample
        .as_ref()
        .map(|s| &s.inner)
        .ok_or_else(|| null("sample"))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (CdStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn cd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `n` points from the arrays `x` and `y` into a new sample.
///
/// # Safety
/// `x` and `y` must each point to `n` readable doubles; `out` must be a
/// valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn cd_sample_new(
    x: *const f64,
    y: *const f64,
    n: usize,
    out: *mut *mut CdSample,
) -> CdStatus {
    guard(|| {
        if x.is_null() || y.is_null() {
            return Err(null("input array"));
        }
        if out.is_null() {
            return Err(null("output pointer"));
        }
        let xs = std::slice::from_raw_parts(x, n).to_vec();
        let ys = std::slice::from_raw_parts(y, n).to_vec();
        let inner = lib(BivariateSample::from_columns(xs, ys))?;
        out.write(Box::into_raw(Box::new(CdSample { inner })));
        Ok(())
    })
}

/// Releases a sample. NULL is ignored.
///
/// # Safety
/// `sample` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn cd_sample_free(sample: *mut CdSample) {
    if !sample.is_null() {
        drop(Box::from_raw(sample));
    }
}

/// Number of points, or 0 for NULL.
///
/// # Safety
/// `sample` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cd_sample_len(sample: *const CdSample) -> usize {
    sample.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies the coordinates into caller buffers of at least `capacity` doubles.
///
/// # Safety
/// `sample` must be a live handle; `x_out` and `y_out` must each have room
/// for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn cd_sample_copy(
    sample: *const CdSample,
    x_out: *mut f64,
    y_out: *mut f64,
    capacity: usize,
) -> CdStatus {
    guard(|| {
        let s = sample_ref(sample)?;
        if x_out.is_null() || y_out.is_null() {
            return Err(null("output buffer"));
        }
        if capacity < s.len() {
            return Err((
                CdStatus::InvalidArgument,
                format!("buffer holds {capacity} values, sample has {}", s.len()),
            ));
        }
        ptr::copy_nonoverlapping(s.x().as_ptr(), x_out, s.len());
        ptr::copy_nonoverlapping(s.y().as_ptr(), y_out, s.len());
        Ok(())
    })
}

/// Draws `n` points from the copula `family(theta)`.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn cd_copula_sample(
    family_code: u32,
    theta: f64,
    n: usize,
    seed: u64,
    out: *mut *mut CdSample,
) -> CdStatus {
    guard(|| {
        let model = lib(CopulaModel::new(family(family_code)?, theta))?;
        let inner = lib(copula::sample(&model, n, seed))?;
        write_out(out, Box::into_raw(Box::new(CdSample { inner })))
    })
}

/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn cd_tau_from_theta(
    family_code: u32,
    theta: f64,
    out: *mut f64,
) -> CdStatus {
    guard(|| {
        let model = lib(CopulaModel::new(family(family_code)?, theta))?;
        write_out(out, copula::tau_from_theta(&model))
    })
}

/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn cd_theta_from_tau(family_code: u32, tau: f64, out: *mut f64) -> CdStatus {
    guard(|| write_out(out, lib(copula::theta_from_tau(family(family_code)?, tau))?))
}

/// Empirical Kendall's tau of the sample.
///
/// # Safety
/// `sample` must be a live handle and `out` a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn cd_kendall_tau(sample: *const CdSample, out: *mut f64) -> CdStatus {
    guard(|| {
        let pobs = lib(ranks::pseudo_observations(sample_ref(sample)?))?;
        write_out(out, ranks::kendall_tau(&pobs))
    })
}

/// Copula Discrepancy of the sample against `family(theta_p)`.
///
/// # Safety
/// `sample` must be a live handle and `out` a valid pointer to a report.
#[no_mangle]
pub unsafe extern "C" fn cd_diagnose(
    sample: *const CdSample,
    family_code: u32,
    theta_p: f64,
    estimator_code: u32,
    out: *mut CdReport,
) -> CdStatus {
    guard(|| {
        let s = sample_ref(sample)?;
        let r = lib(discrepancy::cd(
            s,
            family(family_code)?,
            theta_p,
            estimator(estimator_code)?,
        ))?;
        write_out(
            out,
            CdReport {
                estimator: estimator_code,
                theta_p: r.theta_p,
                tau_p: r.tau_p,
                theta_hat: r.theta_hat,
                tau_hat: r.tau_hat,
                tau_hat_model: r.tau_hat_model,
                cd: r.cd,
                n: r.n,
                wall_time_s: r.wall_time.as_secs_f64(),
                degenerate: r.degenerate,
                boundary: r.boundary,
                log_likelihood: r.log_likelihood.unwrap_or(f64::NAN),
            },
        )
    })
}

/// Equivalence test of the sample's tau against `family(theta_p)` at level
/// `alpha`, with a jackknife variance estimate.
///
/// # Safety
/// `sample` must be a live handle and `out` a valid pointer to a result.
#[no_mangle]
pub unsafe extern "C" fn cd_equivalence_test(
    sample: *const CdSample,
    family_code: u32,
    theta_p: f64,
    alpha: f64,
    out: *mut CdTestResult,
) -> CdStatus {
    guard(|| {
        let s = sample_ref(sample)?;
        let t = lib(discrepancy::equivalence_test(
            s,
            family(family_code)?,
            theta_p,
            alpha,
        ))?;
        write_out(
            out,
            CdTestResult {
                t_statistic: t.t_statistic,
                p_value: t.p_value,
                reject: t.reject,
                alpha: t.alpha,
                critical_value: t.critical_value,
                sigma_tau_hat: t.sigma_tau_hat,
            },
        )
    })
}
