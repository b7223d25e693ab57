use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use gelation_ffi::*;

fn bipartite() -> *mut GelModel {
    let v = [0.0, 1.0, 1.0, 0.0];
    let alpha = [15.0, 2.0];
    let mut m = ptr::null_mut();
    let s = unsafe { gel_model_new(2, v.as_ptr(), alpha.as_ptr(), &mut m) };
    assert_eq!(s, GelStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = gel_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn gelation_time_and_phase() {
    let m = bipartite();
    unsafe {
        assert_eq!(gel_model_dim(m), 2);
        let mut t = 0.0;
        assert_eq!(gel_gelation_time(m, &mut t), GelStatus::Ok);
        assert!((t - 1.0 / 30f64.sqrt()).abs() < 1e-12);
        assert!(gel_last_error().is_null());

        let mut phase = GelPhase::Critical;
        let mut rho = 0.0;
        assert_eq!(gel_classify(m, 0.1, &mut phase, &mut rho), GelStatus::Ok);
        assert_eq!(phase, GelPhase::Subcritical);
        assert_eq!(gel_classify(m, 1.0, &mut phase, &mut rho), GelStatus::Ok);
        assert_eq!(phase, GelPhase::Supercritical);
        gel_model_free(m);
    }
}

#[test]
fn validation_errors_carry_a_message() {
    let v = [1.0, 0.0, 0.0, 1.0];
    let alpha = [1.0, 1.0];
    let mut m = ptr::null_mut();
    let s = unsafe { gel_model_new(2, v.as_ptr(), alpha.as_ptr(), &mut m) };
    assert_eq!(s, GelStatus::InvalidInput);
    assert!(m.is_null());
    assert!(last_error().contains("reducible"));

    let json = CString::new(r#"{"k": 2, "V": [[0, 1], [1, 0]], "alpha": [1, -1]}"#).unwrap();
    let s = unsafe { gel_model_from_json(json.as_ptr(), &mut m) };
    assert_eq!(s, GelStatus::InvalidInput);
    assert!(last_error().contains("$.alpha[1]"));

    let s = unsafe { gel_model_from_json(ptr::null(), &mut m) };
    assert_eq!(s, GelStatus::NullPointer);
}

#[test]
fn null_handles_and_short_buffers() {
    let mut t = 0.0;
    assert_eq!(
        unsafe { gel_gelation_time(ptr::null(), &mut t) },
        GelStatus::NullPointer
    );
    assert_eq!(unsafe { gel_model_dim(ptr::null()) }, 0);
    unsafe { gel_model_free(ptr::null_mut()) };

    let m = bipartite();
    let mut y = [0.0; 1];
    let s = unsafe {
        gel_invert(
            m,
            1.0,
            y.as_mut_ptr(),
            y.len(),
            ptr::null_mut(),
            ptr::null_mut(),
        )
    };
    assert_eq!(s, GelStatus::BufferTooSmall);
    let s = unsafe { gel_gelation_time(m, ptr::null_mut()) };
    assert_eq!(s, GelStatus::NullPointer);
    unsafe { gel_model_free(m) };
}

#[test]
fn analytic_routes_agree_post_gel() {
    let json = CString::new(r#"{"k": 1, "V": [[1]], "alpha": [1]}"#).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { gel_model_from_json(json.as_ptr(), &mut m) },
        GelStatus::Ok
    );
    unsafe {
        let (mut y, mut it, mut res) = ([0.0], 0usize, 0.0);
        assert_eq!(
            gel_invert(m, 2.0, y.as_mut_ptr(), 1, &mut it, &mut res),
            GelStatus::Ok
        );
        assert!((y[0] - 0.4063757).abs() < 1e-6);
        assert!(res < 1e-12);

        let mut eta = [0.0];
        assert_eq!(
            gel_extinction_fixed_point(m, 2.0, eta.as_mut_ptr(), 1),
            GelStatus::Ok
        );
        assert!((eta[0] - y[0] / 2.0).abs() < 1e-12);

        let (mut series, mut tail) = ([0.0], 0.0);
        assert_eq!(
            gel_extinction_series(m, 2.0, 60, series.as_mut_ptr(), 1, &mut tail),
            GelStatus::Ok
        );
        assert!((series[0] - eta[0]).abs() < 1e-6 + tail);

        let (mut mass, mut tail) = ([0.0], 0.0);
        assert_eq!(
            gel_total_mass(m, 2.0, 60, mass.as_mut_ptr(), 1, &mut tail),
            GelStatus::Ok
        );
        assert!((mass[0] * 2.0 - y[0]).abs() < 1e-6 + 2.0 * tail);

        let mut z = 0.0;
        let x = [2u32];
        assert_eq!(gel_zeta(m, x.as_ptr(), 1, 0.5, &mut z), GelStatus::Ok);
        assert!((z - 0.5 * (-1.0f64).exp() / 2.0).abs() < 1e-15);
        assert_eq!(
            gel_zeta(m, x.as_ptr(), 2, 0.5, &mut z),
            GelStatus::InvalidInput
        );
        gel_model_free(m);
    }
}

#[test]
fn convergence_failure_status() {
    let json = CString::new(r#"{"k": 1, "V": [[1]], "alpha": [1]}"#).unwrap();
    let mut m = ptr::null_mut();
    unsafe {
        gel_model_from_json(json.as_ptr(), &mut m);
        let mut y = [0.0];
        let s = gel_invert(
            m,
            1.000000002,
            y.as_mut_ptr(),
            1,
            ptr::null_mut(),
            ptr::null_mut(),
        );
        assert_eq!(s, GelStatus::NoConvergence);
        assert!(last_error().contains("did not converge"));
        gel_model_free(m);
    }
}

#[test]
fn simulators() {
    let m = bipartite();
    unsafe {
        let mut extinct = 0u64;
        assert_eq!(
            gel_simulate_branching(m, 1.0, 0, 3, 4_000, 10_000, 1_000, &mut extinct),
            GelStatus::Ok
        );
        let f = extinct as f64 / 4_000.0;
        let eta = (2.0 * ((15.0f64 * (0.1353 - 1.0)).exp() - 1.0)).exp();
        assert!(
            (f - eta).abs() < 5.0 * (eta * (1.0 - eta) / 4_000.0).sqrt(),
            "{f} vs {eta}"
        );
        assert_eq!(
            gel_simulate_branching(m, 1.0, 2, 3, 10, 10, 10, &mut extinct),
            GelStatus::InvalidInput
        );

        let mut frac = 0.0;
        assert_eq!(
            gel_sample_giant_fraction(m, 0.0, 100, 1, &mut frac),
            GelStatus::Ok
        );
        assert_eq!(frac, 1.0 / 1700.0);
        gel_model_free(m);
    }
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(gel_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

/// Compiles and runs a small C program against the generated header and the
/// static library. Skipped when no C compiler or static library is around.
#[test]
fn c_program_links_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = crate_dir.join("include");
    assert!(header_dir.join("gelation.h").exists());

    // target/<profile>/deps/<test binary> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libgelation_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no cc or {}", lib.display());
        return;
    }

    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"
#include <math.h>
#include <stdio.h>
#include "gelation.h"

int main(void) {
    const double v[4] = {0, 1, 1, 0};
    const double alpha[2] = {15, 2};
    GelModel *m = NULL;
    if (gel_model_new(2, v, alpha, &m) != GEL_STATUS_OK) return 1;
    double t = 0;
    if (gel_gelation_time(m, &t) != GEL_STATUS_OK) return 2;
    double y[2];
    size_t it = 0;
    if (gel_invert(m, 3.0, y, 2, &it, NULL) != GEL_STATUS_OK) return 3;
    if (gel_invert(m, 3.0, y, 1, NULL, NULL) != GEL_STATUS_BUFFER_TOO_SMALL) return 4;
    if (gel_last_error() == NULL) return 5;
    printf("%.10f %.10f\n", t, y[0]);
    gel_model_free(m);
    return fabs(t - 1.0 / sqrt(30.0)) < 1e-12 ? 0 : 6;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "cc failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.starts_with("0.1825741858"), "{text}");
}
