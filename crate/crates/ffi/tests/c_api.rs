use std::ffi::CStr;
use std::ptr;

use copula_discrepancy_ffi::*;

fn last_error() -> String {
    let p = cd_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_sample(x: &[f64], y: &[f64]) -> *mut CdSample {
    let mut handle = ptr::null_mut();
    let status = unsafe { cd_sample_new(x.as_ptr(), y.as_ptr(), x.len(), &mut handle) };
    assert_eq!(status, CdStatus::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn sample_round_trips_through_handle() {
    let x = [0.5, -1.25, 3.0];
    let y = [2.0, 0.0, -7.5];
    let h = new_sample(&x, &y);
    assert_eq!(unsafe { cd_sample_len(h) }, 3);
    let (mut xo, mut yo) = ([0.0; 3], [0.0; 3]);
    let status = unsafe { cd_sample_copy(h, xo.as_mut_ptr(), yo.as_mut_ptr(), 3) };
    assert_eq!(status, CdStatus::Ok);
    assert_eq!((xo, yo), (x, y));

    let status = unsafe { cd_sample_copy(h, xo.as_mut_ptr(), yo.as_mut_ptr(), 2) };
    assert_eq!(status, CdStatus::InvalidArgument);
    assert!(last_error().contains("buffer"));
    unsafe { cd_sample_free(h) };
}

#[test]
fn null_and_invalid_inputs_report_status() {
    let mut h = ptr::null_mut();
    let status = unsafe { cd_sample_new(ptr::null(), ptr::null(), 0, &mut h) };
    assert_eq!(status, CdStatus::NullPointer);
    assert!(h.is_null());
    assert_eq!(unsafe { cd_sample_len(ptr::null()) }, 0);
    unsafe { cd_sample_free(ptr::null_mut()) };

    let x = [1.0, f64::NAN];
    let y = [0.0, 1.0];
    let status = unsafe { cd_sample_new(x.as_ptr(), y.as_ptr(), 2, &mut h) };
    assert_eq!(status, CdStatus::DataError);
    assert!(last_error().contains("non-finite"));

    let mut out = 0.0;
    assert_eq!(
        unsafe { cd_tau_from_theta(7, 2.0, &mut out) },
        CdStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { cd_tau_from_theta(CD_FAMILY_GUMBEL, 0.5, &mut out) },
        CdStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { cd_tau_from_theta(CD_FAMILY_GUMBEL, 2.0, ptr::null_mut()) },
        CdStatus::NullPointer
    );
}

#[test]
fn error_message_clears_on_success() {
    let mut out = 0.0;
    unsafe { cd_tau_from_theta(9, 2.0, &mut out) };
    assert!(!cd_last_error_message().is_null());
    assert_eq!(
        unsafe { cd_tau_from_theta(CD_FAMILY_GUMBEL, 2.0, &mut out) },
        CdStatus::Ok
    );
    assert!(cd_last_error_message().is_null());
}

#[test]
fn tau_maps_match_closed_forms() {
    let mut out = 0.0;
    // Gumbel tau = 1 - 1/theta, Clayton tau = theta / (theta + 2).
    assert_eq!(
        unsafe { cd_tau_from_theta(CD_FAMILY_GUMBEL, 2.0, &mut out) },
        CdStatus::Ok
    );
    assert!((out - 0.5).abs() < 1e-12);
    assert_eq!(
        unsafe { cd_tau_from_theta(CD_FAMILY_CLAYTON, 3.0, &mut out) },
        CdStatus::Ok
    );
    assert!((out - 0.6).abs() < 1e-12);
    assert_eq!(
        unsafe { cd_theta_from_tau(CD_FAMILY_GUMBEL, 0.75, &mut out) },
        CdStatus::Ok
    );
    assert!((out - 4.0).abs() < 1e-9);
    assert_eq!(
        unsafe { cd_theta_from_tau(CD_FAMILY_CLAYTON, 0.5, &mut out) },
        CdStatus::Ok
    );
    assert!((out - 2.0).abs() < 1e-9);
}

#[test]
fn kendall_tau_and_moment_cd_on_hand_counted_sample() {
    // One discordant pair out of six: tau = (5 - 1) / 6.
    let h = new_sample(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]);
    let mut tau = 0.0;
    assert_eq!(unsafe { cd_kendall_tau(h, &mut tau) }, CdStatus::Ok);
    assert!((tau - 2.0 / 3.0).abs() < 1e-12);

    let mut report = CdReport::default();
    let status = unsafe { cd_diagnose(h, CD_FAMILY_GUMBEL, 2.0, CD_ESTIMATOR_MOMENT, &mut report) };
    assert_eq!(status, CdStatus::Ok);
    assert_eq!(report.n, 4);
    assert!((report.tau_p - 0.5).abs() < 1e-12);
    assert!((report.cd - 1.0 / 6.0).abs() < 1e-9);
    assert!(report.log_likelihood.is_nan());
    unsafe { cd_sample_free(h) };
}

#[test]
fn sampled_copula_is_seeded_and_diagnosable() {
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(
            cd_copula_sample(CD_FAMILY_CLAYTON, 3.0, 2000, 11, &mut a),
            CdStatus::Ok
        );
        assert_eq!(
            cd_copula_sample(CD_FAMILY_CLAYTON, 3.0, 2000, 11, &mut b),
            CdStatus::Ok
        );
    }
    let mut xa = vec![0.0; 2000];
    let mut ya = vec![0.0; 2000];
    let mut xb = vec![0.0; 2000];
    let mut yb = vec![0.0; 2000];
    unsafe {
        cd_sample_copy(a, xa.as_mut_ptr(), ya.as_mut_ptr(), 2000);
        cd_sample_copy(b, xb.as_mut_ptr(), yb.as_mut_ptr(), 2000);
    }
    assert_eq!((&xa, &ya), (&xb, &yb));
    assert!(xa.iter().chain(&ya).all(|&u| u > 0.0 && u < 1.0));

    let mut report = CdReport::default();
    let status = unsafe { cd_diagnose(a, CD_FAMILY_CLAYTON, 3.0, CD_ESTIMATOR_MLE, &mut report) };
    assert_eq!(status, CdStatus::Ok);
    assert!(report.cd < 0.05, "cd = {}", report.cd);
    assert!(report.log_likelihood.is_finite());

    let mut test = CdTestResult::default();
    let status = unsafe { cd_equivalence_test(a, CD_FAMILY_CLAYTON, 3.0, 0.05, &mut test) };
    assert_eq!(status, CdStatus::Ok);
    assert!(test.sigma_tau_hat > 0.0);
    assert!((0.0..=1.0).contains(&test.p_value));
    assert_eq!(test.reject, test.p_value < 0.05);
    unsafe {
        cd_sample_free(a);
        cd_sample_free(b);
    }
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/copula_discrepancy.h"
    ))
    .unwrap();
    for name in [
        "typedef struct CdSample CdSample",
        "CD_STATUS_OK = 0",
        "CD_FAMILY_CLAYTON",
        "cd_last_error_message",
        "cd_sample_new",
        "cd_sample_free",
        "cd_sample_len",
        "cd_sample_copy",
        "cd_copula_sample",
        "cd_tau_from_theta",
        "cd_theta_from_tau",
        "cd_kendall_tau",
        "cd_diagnose",
        "cd_equivalence_test",
        "typedef struct CdReport",
        "typedef struct CdTestResult",
    ] {
        assert!(header.contains(name), "header is missing {name}");
    }
}
