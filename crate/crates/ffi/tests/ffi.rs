use std::ffi::CStr;
use std::ptr;

use nonlinq_ffi::*;

fn system(j: f64) -> *mut NqSystem {
    let mut sys = ptr::null_mut();
    assert_eq!(unsafe { nq_system_new(0.91, 0.057, j, 0.0, &mut sys) }, NqStatus::Ok);
    assert!(!sys.is_null());
    sys
}

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe { nq_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn regime_matches_coupling() {
    let sys = system(0.1);
    let mut r = NqRegimeReport::default();
    unsafe {
        assert_eq!(nq_classify_regime(sys, &mut r), NqStatus::Ok);
        assert_eq!(r.regime, NqRegime::Broken as i32);
        assert_eq!(nq_system_set_coupling(sys, 0.2275), NqStatus::Ok);
        assert_eq!(nq_classify_regime(sys, &mut r), NqStatus::Ok);
        assert_eq!(r.regime, NqRegime::ExceptionalPoint as i32);
        assert!(r.eigenvector_overlap > 1.0 - 1e-6);
        nq_system_free(sys);
    }
}

#[test]
fn first_passage_time_below_and_above() {
    let sys = system(0.15);
    let (mut t, mut found) = (0.0, 0);
    unsafe {
        assert_eq!(nq_first_passage_time(sys, 20.0, 1e-3, &mut t, &mut found), NqStatus::Ok);
        assert_eq!(found, 1);
        assert!((t - 5.713037).abs() < 1e-3, "{t}");
        assert_eq!(nq_first_passage_time(sys, 5.0, 1e-3, &mut t, &mut found), NqStatus::Ok);
        assert_eq!(found, 0);
        assert!(t.is_nan());
        nq_system_free(sys);
    }
}

#[test]
fn propagate_keeps_norm() {
    let sys = system(0.5);
    let (re, im) = ([1.0, 0.0], [0.0, 0.0]);
    let (mut ore, mut oim, mut s) = ([0.0; 2], [0.0; 2], 0.0);
    unsafe {
        let st = nq_propagate(sys, re.as_ptr(), im.as_ptr(), 1.3, ore.as_mut_ptr(), oim.as_mut_ptr(), &mut s);
        assert_eq!(st, NqStatus::Ok);
        nq_system_free(sys);
    }
    let n: f64 = (0..2).map(|k| ore[k] * ore[k] + oim[k] * oim[k]).sum();
    assert!((n - 1.0).abs() < 1e-12);
    assert!(s > 0.0 && s < 1.0);
}

#[test]
fn lindblad_populations_sum_to_one() {
    let sys = system(0.24);
    let mut p = [0.0; 3];
    unsafe {
        assert_eq!(nq_lindblad_populations(sys, 2.0, 0.0, p.as_mut_ptr()), NqStatus::Ok);
        nq_system_free(sys);
    }
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    assert!(p[0] > 0.0);
}

#[test]
fn linearity_scan_starts_at_one() {
    let sys = system(1.0);
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.1).collect();
    let mut ofs = vec![0.0; times.len()];
    unsafe {
        let st = nq_linearity_scan(sys, NqInitialState::PlusX, times.as_ptr(), times.len(), ofs.as_mut_ptr());
        assert_eq!(st, NqStatus::Ok);
        nq_system_free(sys);
    }
    assert!((ofs[0] - 1.0).abs() < 1e-12);
    assert!(ofs.iter().all(|v| *v > 0.9 && *v <= 1.0 + 1e-12));
}

#[test]
fn ibu_and_reconstruction() {
    let identity = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
    let obs = [0.2, 0.5, 0.3];
    let mut p = [0.0; 3];
    unsafe {
        assert_eq!(nq_ibu_correct(obs.as_ptr(), identity.as_ptr(), 50, p.as_mut_ptr()), NqStatus::Ok);
    }
    for k in 0..3 {
        assert!((p[k] - obs[k]).abs() < 1e-12);
    }
    unsafe {
        assert_eq!(nq_ibu_correct(obs.as_ptr(), ptr::null(), 50, p.as_mut_ptr()), NqStatus::Ok);
    }
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let (x, y, z) = ([0.5, 0.25, 0.25], [0.5, 0.25, 0.25], [0.5, 0.5, 0.0]);
    let mut b = [0.0; 3];
    unsafe {
        assert_eq!(nq_reconstruct_bloch(x.as_ptr(), y.as_ptr(), z.as_ptr(), b.as_mut_ptr()), NqStatus::Ok);
    }
    assert!(b[0].abs() < 1e-12 && b[1].abs() < 1e-12 && (b[2] - 1.0).abs() < 1e-12);

    let empty = [1.0, 0.0, 0.0];
    unsafe {
        assert_eq!(nq_reconstruct_bloch(empty.as_ptr(), y.as_ptr(), z.as_ptr(), b.as_mut_ptr()), NqStatus::Numerical);
    }
    assert!(!last_error().is_empty());
}

#[test]
fn ensemble_handle() {
    let sys = system(0.24);
    let times = [0.0, 0.5, 1.0];
    let mut ens = ptr::null_mut();
    let (mut frac, mut mean, mut sigma) = (0.0, [0.0; 3], [0.0; 3]);
    unsafe {
        assert_eq!(nq_ensemble_sample(sys, times.as_ptr(), 3, 0.0, 3, 500, &mut ens), NqStatus::Ok);
        assert_eq!(nq_ensemble_success_fraction(ens, 0, &mut frac), NqStatus::Ok);
        assert_eq!(frac, 1.0);
        assert_eq!(nq_ensemble_success_fraction(ens, 2, &mut frac), NqStatus::Ok);
        assert!(frac > 0.2 && frac < 0.7, "{frac}");
        assert_eq!(nq_ensemble_success_fraction(ens, 3, &mut frac), NqStatus::InvalidInput);
        assert_eq!(
            nq_ensemble_conditioned_bloch(ens, 1, mean.as_mut_ptr(), sigma.as_mut_ptr()),
            NqStatus::Ok
        );
        nq_ensemble_free(ens);
        nq_system_free(sys);
    }
    assert!(mean[1] < 0.0);
}

#[test]
fn errors_are_reported() {
    let mut sys = ptr::null_mut();
    unsafe {
        assert_eq!(nq_system_new(0.91, 0.057, f64::NAN, 0.0, &mut sys), NqStatus::InvalidInput);
        assert!(sys.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(nq_system_new(0.91, 0.057, 0.2, 0.0, ptr::null_mut()), NqStatus::NullPointer);
        assert_eq!(nq_classify_regime(ptr::null(), ptr::null_mut()), NqStatus::NullPointer);
        assert!(last_error().contains("null"));
        nq_system_free(ptr::null_mut());
        nq_ensemble_free(ptr::null_mut());
    }
    let sys = system(0.3);
    let mut ens = ptr::null_mut();
    let times = [0.0, 1.0];
    unsafe {
        assert_eq!(nq_ensemble_sample(sys, times.as_ptr(), 2, 0.0, 1, 0, &mut ens), NqStatus::InvalidInput);
        assert!(ens.is_null());
        nq_system_free(sys);
    }
}

#[test]
fn header_compiles_and_links_from_c() {
    let Ok(cc) = which_cc() else { return };
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let target = root.join("../../target/debug");
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = std::process::Command::new(cc)
        .arg(root.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(target.join("libnonlinq_ffi.a"))
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
