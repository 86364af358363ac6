use std::ffi::{CStr, CString};
use std::ptr;

use rp_entropy_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { rp_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn random_state(dim: usize, seed: u64) -> *mut RpState {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rp_state_random(dim, seed, 1e-6, &mut s) }, RpStatus::Ok);
    s
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(rp_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn gram_of_integer_index_is_psd_with_unit_diagonal_scale() {
    let s = random_state(4, 3);
    for _ in 0..3 {
        assert_eq!(unsafe { rp_state_add_random_split(s, 2, 2, 5) }, RpStatus::Ok);
    }
    assert_eq!(unsafe { rp_state_split_count(s) }, 3);
    let mut g = [0.0; 9];
    let mut v = RpPsd { passed: false, min_eigenvalue: 0.0, spectral_norm: 0.0, relative_slack: 0.0 };
    for n in 2..=4 {
        assert_eq!(unsafe { rp_gram(s, n, f64::NAN, 1e-10, g.as_mut_ptr(), 9, &mut v) }, RpStatus::Ok);
        assert!(v.passed && v.min_eigenvalue >= -1e-12);
        for i in 0..3 {
            for j in 0..3 {
                assert!((g[i * 3 + j] - g[j * 3 + i]).abs() < 1e-12);
                // e^{-(n-1) S_n} agrees with the reflected entropy call
                let mut sn = 0.0;
                assert_eq!(unsafe { rp_reflected_entropy(s, i, j, n, &mut sn) }, RpStatus::Ok);
                assert!((g[i * 3 + j] - (-((n - 1) as f64) * sn).exp()).abs() < 1e-12);
            }
        }
    }
    assert_eq!(
        unsafe { rp_gram(s, 2, f64::NAN, 1e-10, g.as_mut_ptr(), 4, ptr::null_mut()) },
        RpStatus::InvalidArgument
    );
    assert_eq!(unsafe { rp_gram(s, 1, f64::NAN, 1e-10, g.as_mut_ptr(), 9, ptr::null_mut()) }, RpStatus::Config);
    assert!(last_error().contains("lambda"));
    unsafe { rp_state_free(s) };
}

#[test]
fn same_seed_same_state() {
    let (a, b) = (random_state(6, 9), random_state(6, 9));
    let (mut sa, mut sb) = (0.0, 0.0);
    unsafe {
        rp_state_add_axis_split(a, 2, 3);
        rp_state_add_axis_split(b, 2, 3);
        assert_eq!(rp_state_entropy(a, 0, 2, &mut sa), RpStatus::Ok);
        assert_eq!(rp_state_entropy(b, 0, 2, &mut sb), RpStatus::Ok);
        rp_state_free(a);
        rp_state_free(b);
    }
    assert_eq!(sa, sb);
    assert!(sa > 0.0);
}

#[test]
fn explicit_density_and_validation() {
    // maximally mixed qubit pair: every reduced state is maximally mixed
    let mut re = [0.0; 16];
    for i in 0..4 {
        re[i * 5] = 0.25;
    }
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { rp_state_from_density(4, re.as_ptr(), ptr::null(), &mut s) }, RpStatus::Ok);
    unsafe { rp_state_add_axis_split(s, 2, 2) };
    let mut e = 0.0;
    assert_eq!(unsafe { rp_state_entropy(s, 0, 1, &mut e) }, RpStatus::Ok);
    assert!((e - 2f64.ln()).abs() < 1e-12);
    assert_eq!(unsafe { rp_state_entropy(s, 1, 1, &mut e) }, RpStatus::InvalidArgument);
    unsafe { rp_state_free(s) };

    re[0] = 0.5;
    let mut bad = ptr::null_mut();
    assert_eq!(unsafe { rp_state_from_density(4, re.as_ptr(), ptr::null(), &mut bad) }, RpStatus::InvalidArgument);
    assert!(bad.is_null());
    assert!(last_error().contains("trace"));
    assert_eq!(unsafe { rp_state_from_density(4, ptr::null(), ptr::null(), &mut bad) }, RpStatus::NullPointer);
}

#[test]
fn psd_check_flags_indefinite_matrix() {
    let mut v = RpPsd { passed: true, min_eigenvalue: 0.0, spectral_norm: 0.0, relative_slack: 0.0 };
    let m = [1.0, 2.0, 2.0, 1.0];
    assert_eq!(unsafe { rp_check_psd(m.as_ptr(), 2, 1e-10, &mut v) }, RpStatus::Ok);
    assert!(!v.passed);
    assert!((v.min_eigenvalue + 1.0).abs() < 1e-12);
    assert!((v.relative_slack + 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn fermion_and_cft_scalars() {
    let mut s = 0.0;
    let ends = [0.0, 5.0];
    assert_eq!(unsafe { rp_fermion_renyi(ends.as_ptr(), 1, 1.0, 1.0, &mut s) }, RpStatus::Ok);
    assert!((s - 5f64.ln() / 6.0).abs() < 1e-14);
    assert_eq!(unsafe { rp_fermion_renyi(ends.as_ptr(), 1, 1.0, f64::INFINITY, &mut s) }, RpStatus::Ok);
    assert!((s - 5f64.ln() / 12.0).abs() < 1e-14);
    let overlap = [0.0, 2.0, 1.0, 3.0];
    assert_eq!(unsafe { rp_fermion_renyi(overlap.as_ptr(), 2, 1.0, 1.0, &mut s) }, RpStatus::InvalidArgument);

    let mut x = 0.0;
    assert_eq!(unsafe { rp_cft_cross_ratio(0.0, 1.0, 2.0, 3.0, &mut x) }, RpStatus::Ok);
    assert!((x - 0.25).abs() < 1e-15);
    let mut z = 0.0;
    assert_eq!(unsafe { rp_cft_z_point(0.3, 0.3, &mut z) }, RpStatus::Ok);
    assert_eq!(z, 0.3);
    assert_eq!(unsafe { rp_cft_z_point(0.3, 1.5, &mut z) }, RpStatus::InvalidArgument);
}

#[test]
fn run_commands_through_the_abi() {
    let cmd = CString::new("fermion").unwrap();
    let cfg = CString::new(r#"{"configurations": 20, "witness_families": 20}"#).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { rp_run(cmd.as_ptr(), cfg.as_ptr(), 1, &mut r) }, RpStatus::Ok);
    assert_eq!(unsafe { rp_report_exit_code(r) }, 0);
    assert!(unsafe { rp_report_passed(r) });
    let json: serde_json::Value =
        serde_json::from_str(unsafe { CStr::from_ptr(rp_report_json(r)) }.to_str().unwrap()).unwrap();
    assert_eq!(json["command"], "fermion");
    let count = unsafe { rp_report_table_count(r) };
    assert!(count > 0);
    let csv = unsafe { CStr::from_ptr(rp_report_table_csv(r, 0)) }.to_str().unwrap();
    assert!(csv.lines().count() > 1);
    assert!(unsafe { rp_report_table_name(r, count) }.is_null());
    unsafe { rp_report_free(r) };

    let bad = CString::new("{\n  \"pairs\": ,\n}").unwrap();
    let cft = CString::new("cft").unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { rp_run(cft.as_ptr(), bad.as_ptr(), 1, &mut r) }, RpStatus::Config);
    assert!(last_error().starts_with("invalid configuration: config:2:12:"), "{}", last_error());
    let nope = CString::new("nope").unwrap();
    assert_eq!(unsafe { rp_run(nope.as_ptr(), ptr::null(), 1, &mut r) }, RpStatus::Config);

    let violator = CString::new(r#"{"function": "violator", "pairs": 50, "grid_points": 50}"#).unwrap();
    assert_eq!(unsafe { rp_run(cft.as_ptr(), violator.as_ptr(), 1, &mut r) }, RpStatus::Ok);
    assert_eq!(unsafe { rp_report_exit_code(r) }, 2);
    unsafe { rp_report_free(r) };
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        rp_state_free(ptr::null_mut());
        rp_report_free(ptr::null_mut());
        assert_eq!(rp_state_dim(ptr::null()), 0);
        assert_eq!(rp_report_exit_code(ptr::null()), -1);
        assert!(rp_report_json(ptr::null()).is_null());
        assert_eq!(rp_state_add_axis_split(ptr::null_mut(), 2, 2), RpStatus::NullPointer);
    }
}
