use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use iscore_ffi::*;

const SPEC: &str = "maf = [0.2, 0.2, 0.2, 0.2, 0.2, 0.2]\nt = {\"0\": 0.97, \"1\": 0.6, \"2\": 0.4}\n";

fn last_error() -> String {
    let p = iscore_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn model() -> *mut IscoreModel {
    let text = CString::new(SPEC).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { iscore_model_from_spec(text.as_ptr(), &mut m) },
        IscoreStatus::Ok
    );
    assert!(!m.is_null());
    m
}

#[test]
fn binomial_functions_match_library() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(iscore_neg_rel_bias(500, 0.625, 10.0, &mut v), IscoreStatus::Ok);
        assert_eq!(v, iscore::exact_binomial::neg_rel_bias(500, 0.625, 10.0).unwrap());
        assert!((v - 0.5453).abs() < 5e-5);
        assert_eq!(iscore_tie_half_prob(100, 10.0, 1.25, &mut v), IscoreStatus::Ok);
        assert!((v - 0.3115).abs() < 5e-5);
        assert_eq!(iscore_expected_min(10, 0.5, 0.5, &mut v), IscoreStatus::Ok);
        let pair = iscore::exact_binomial::BinomialPair::new(10, 0.5, 0.5).unwrap();
        assert_eq!(v, iscore::exact_binomial::expected_min(&pair));
        assert_eq!(iscore_half_tie_probability(10, 0.5, 0.5, &mut v), IscoreStatus::Ok);
        assert!((v - 0.5).abs() < 1e-12);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut v = 7.0;
    unsafe {
        assert_eq!(iscore_neg_rel_bias(10, 20.0, 2.0, &mut v), IscoreStatus::Domain);
        assert!(last_error().contains("lambda"));
        assert_eq!(v, 7.0, "output untouched on failure");
        assert_eq!(
            iscore_expected_min(10, 1.5, 0.5, ptr::null_mut()),
            IscoreStatus::NullPointer
        );

        let bad = CString::new("maf = [0.2\n").unwrap();
        let mut m = ptr::null_mut();
        assert_eq!(iscore_model_from_spec(bad.as_ptr(), &mut m), IscoreStatus::Parse);
        assert!(m.is_null());
        assert_eq!(iscore_model_from_spec(ptr::null(), &mut m), IscoreStatus::NullPointer);
        let invalid = [0xffu8, 0xfe, 0];
        assert_eq!(
            iscore_model_from_spec(invalid.as_ptr().cast(), &mut m),
            IscoreStatus::InvalidUtf8
        );

        let mut p = IscoreOracleParams::default();
        assert_eq!(
            iscore_model_oracle_params(ptr::null(), &mut p),
            IscoreStatus::NullPointer
        );
        iscore_model_free(ptr::null_mut());
        iscore_sample_free(ptr::null_mut());
    }
}

#[test]
fn model_and_sample_handles() {
    let m = model();
    unsafe {
        let mut p = IscoreOracleParams::default();
        assert_eq!(iscore_model_oracle_params(m, &mut p), IscoreStatus::Ok);
        assert!((p.theta_e - 0.182).abs() < 1e-3);
        assert!((p.bound_on_theta_e - 0.207).abs() < 1e-3);

        let mut s = ptr::null_mut();
        assert_eq!(iscore_simulate(m, 200, 5, 0, &mut s), IscoreStatus::Ok);
        let (mut rows, mut vars) = (0, 0);
        assert_eq!(iscore_sample_dims(s, &mut rows, &mut vars), IscoreStatus::Ok);
        assert_eq!((rows, vars), (400, 6));

        let subset = [0usize, 1, 2];
        let (mut i, mut e) = (0.0, 0.0);
        assert_eq!(
            iscore_i_score(s, subset.as_ptr(), subset.len(), &mut i),
            IscoreStatus::Ok
        );
        assert_eq!(
            iscore_theta_e_train(s, subset.as_ptr(), subset.len(), &mut e),
            IscoreStatus::Ok
        );
        let direct = iscore::simulator::draw_case_control(&iscore::catalog::single_example(), 200, 5, 0).unwrap();
        assert_eq!(i, iscore::estimators::i_score(&direct, &subset).unwrap());
        assert!(e > 0.0 && e < 0.5);

        let out_of_range = [9usize];
        assert_ne!(iscore_i_score(s, out_of_range.as_ptr(), 1, &mut i), IscoreStatus::Ok);
        assert!(!last_error().is_empty());

        iscore_sample_free(s);
        iscore_model_free(m);
    }
}

#[test]
fn sample_from_rows() {
    let labels = [1u8, 1, 0, 0];
    let values = [0u32, 1, 0, 1, 1, 0, 1, 0];
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(
            iscore_sample_from_rows(labels.as_ptr(), values.as_ptr(), 4, 2, &mut s),
            IscoreStatus::Ok
        );
        let mut i = 0.0;
        assert_eq!(iscore_i_score(s, [0usize].as_ptr(), 1, &mut i), IscoreStatus::Ok);
        // cases all 0 and controls all 1 on the first column: I = (2² + 2²)/(2·2) = 2
        assert!((i - 2.0).abs() < 1e-12, "{i}");
        let mut e = 1.0;
        assert_eq!(iscore_theta_e_train(s, [0usize].as_ptr(), 1, &mut e), IscoreStatus::Ok);
        assert_eq!(e, 0.0);
        iscore_sample_free(s);
        assert_eq!(
            iscore_sample_from_rows(labels.as_ptr(), ptr::null(), 4, 2, &mut s),
            IscoreStatus::NullPointer
        );
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(iscore_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn static_lib() -> Option<PathBuf> {
    // target/<profile>/deps/<test-binary>
    let exe = std::env::current_exe().ok()?;
    let dir = exe.parent()?.parent()?;
    let lib = dir.join("libiscore_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn header_compiles_and_links_from_c() {
    let lib = static_lib().expect("static library built next to the test binary");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "iscore.h"
int main(void) {
    double b = 0.0;
    if (iscore_neg_rel_bias(500, 0.625, 10.0, &b) != ISCORE_STATUS_OK) return 1;
    if (iscore_neg_rel_bias(10, 20.0, 2.0, &b) != ISCORE_STATUS_DOMAIN) return 2;
    if (iscore_last_error_message() == NULL) return 3;
    IscoreModel *m = NULL;
    if (iscore_model_from_spec("maf = [0.2, 0.2]\nt = {\"0\": 0.97, \"1\": 0.6, \"2\": 0.4}\n", &m) != ISCORE_STATUS_OK) return 4;
    IscoreOracleParams p;
    if (iscore_model_oracle_params(m, &p) != ISCORE_STATUS_OK) return 5;
    IscoreSample *s = NULL;
    if (iscore_simulate(m, 50, 1, 0, &s) != ISCORE_STATUS_OK) return 6;
    size_t subset[1] = {0};
    double i = 0.0;
    if (iscore_i_score(s, subset, 1, &i) != ISCORE_STATUS_OK) return 7;
    iscore_sample_free(s);
    iscore_model_free(m);
    printf("%.4f %.3f\n", b, p.theta_e);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler available");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "0.5453 0.182\n");
}
