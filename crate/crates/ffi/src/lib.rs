//! C ABI for nonlinq.
//!
//! Every function returns an [`NqStatus`]. On failure the message is kept per
//! thread and can be copied out with [`nq_last_error_message`]. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nonlinq::dynamics::{
    build_effective_hamiltonian, build_three_level_model, evolve_lindblad, propagate_nonhermitian, sample_ensemble,
    EnsembleStats, DEFAULT_DT,
};
use nonlinq::linearity::{linearity_scan, InitialState, SimulationMode};
use nonlinq::measurement::{
    ibu_correct, paper_beta, reconstruct_bloch, renormalize_subensemble, ConfusionMatrix, ProbabilityVector,
};
use nonlinq::qcore::{basis_ket, DensityMatrix, Level, StateVector, SystemParams, C64};
use nonlinq::spectral::{classify_regime, first_passage_time, Regime, EP_TOL};
use nonlinq::{Error, ErrorKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Config = 3,
    Data = 4,
    Numerical = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NqRegime {
    Unbroken = 0,
    Broken = 1,
    ExceptionalPoint = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NqInitialState {
    PlusX = 0,
    PlusY = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NqRegimeReport {
    pub regime: i32,
    pub eigenvalue_re: [f64; 2],
    pub eigenvalue_im: [f64; 2],
    pub eigenvector_overlap: f64,
    pub j_ep: f64,
}

/// System parameters (rates in 1/μs, couplings in rad/μs).
pub struct NqSystem {
    params: SystemParams,
}

/// Result of a quantum-jump ensemble run.
pub struct NqEnsemble {
    stats: EnsembleStats,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> NqStatus {
    match err.kind() {
        ErrorKind::Input => NqStatus::InvalidInput,
        ErrorKind::Config => NqStatus::Config,
        ErrorKind::Data => NqStatus::Data,
        ErrorKind::Numerical => NqStatus::Numerical,
    }
}

struct Fail(NqStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(NqStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> NqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            NqStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            NqStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn slice_mut<'a, T>(p: *mut T, n: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, n))
}

unsafe fn read3(p: *const f64, what: &str) -> Result<[f64; 3], Fail> {
    let s = slice(p, 3, what)?;
    Ok([s[0], s[1], s[2]])
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in bytes,
/// excluding the terminator. Pass a null `buf` to query the length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nq_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn nq_system_new(
    gamma_e: f64,
    gamma_f: f64,
    coupling: f64,
    delta: f64,
    out: *mut *mut NqSystem,
) -> NqStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let params = SystemParams::new(gamma_e, gamma_f, coupling, delta)?;
        *out = Box::into_raw(Box::new(NqSystem { params }));
        Ok(())
    })
}

/// # Safety
/// `sys` must be null or a handle from [`nq_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nq_system_free(sys: *mut NqSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nq_system_set_coupling(sys: *mut NqSystem, coupling: f64) -> NqStatus {
    guard(|| {
        let sys = deref_mut(sys, "sys")?;
        let p = sys.params;
        sys.params = SystemParams::new(p.gamma_e, p.gamma_f, coupling, p.delta)?;
        Ok(())
    })
}

/// Eigenvalues of H_eff and the PT regime.
///
/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nq_classify_regime(sys: *const NqSystem, out: *mut NqRegimeReport) -> NqStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let out = deref_mut(out, "out")?;
        let r = classify_regime(&sys.params, EP_TOL)?;
        *out = NqRegimeReport {
            regime: match r.regime {
                Regime::Unbroken => NqRegime::Unbroken,
                Regime::Broken => NqRegime::Broken,
                Regime::ExceptionalPoint => NqRegime::ExceptionalPoint,
            } as i32,
            eigenvalue_re: [r.eigenvalues[0].re, r.eigenvalues[1].re],
            eigenvalue_im: [r.eigenvalues[0].im, r.eigenvalues[1].im],
            eigenvector_overlap: r.eigenvector_overlap,
            j_ep: r.j_ep,
        };
        Ok(())
    })
}

/// First passage time from |e⟩ to |f⟩ under postselected evolution.
/// `found` is set to 0 when no transfer peak occurs before `horizon`.
///
/// # Safety
/// `sys` must be a live handle; `fpt` and `found` writable.
#[no_mangle]
pub unsafe extern "C" fn nq_first_passage_time(
    sys: *const NqSystem,
    horizon: f64,
    dt: f64,
    fpt: *mut f64,
    found: *mut i32,
) -> NqStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let fpt = deref_mut(fpt, "fpt")?;
        let found = deref_mut(found, "found")?;
        let r = first_passage_time(&sys.params, &basis_ket(Level::E, 2)?, horizon, dt)?;
        *found = r.fpt.is_some() as i32;
        *fpt = r.fpt.unwrap_or(f64::NAN);
        Ok(())
    })
}

/// Normalized no-jump state at time `t` for the 2-level input
/// `(re[0] + i im[0], re[1] + i im[1])` in the (e, f) basis.
///
/// # Safety
/// Input arrays must hold 2 values; output arrays must be writable for 2.
#[no_mangle]
pub unsafe extern "C" fn nq_propagate(
    sys: *const NqSystem,
    psi_re: *const f64,
    psi_im: *const f64,
    t: f64,
    out_re: *mut f64,
    out_im: *mut f64,
    survival: *mut f64,
) -> NqStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let re = slice(psi_re, 2, "psi_re")?;
        let im = slice(psi_im, 2, "psi_im")?;
        let out_re = slice_mut(out_re, 2, "out_re")?;
        let out_im = slice_mut(out_im, 2, "out_im")?;
        let survival = deref_mut(survival, "survival")?;
        let psi = StateVector::new(&[C64::new(re[0], im[0]), C64::new(re[1], im[1])])?;
        let p = propagate_nonhermitian(&psi, &build_effective_hamiltonian(&sys.params), t)?;
        for k in 0..2 {
            out_re[k] = p.state[k].re;
            out_im[k] = p.state[k].im;
        }
        *survival = p.survival;
        Ok(())
    })
}

/// Populations (g, e, f) at time `t` of the full master equation started in |e⟩.
/// `dt <= 0` selects the default step.
///
/// # Safety
/// `sys` must be a live handle; `out` writable for 3 values.
#[no_mangle]
pub unsafe extern "C" fn nq_lindblad_populations(sys: *const NqSystem, t: f64, dt: f64, out: *mut f64) -> NqStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let out = slice_mut(out, 3, "out")?;
        let dt = if dt > 0.0 { dt } else { DEFAULT_DT };
        let rho0 = DensityMatrix::basis(Level::E, 3)?;
        let rho = evolve_lindblad(&rho0, &build_three_level_model(&sys.params), t, dt)?;
        out.copy_from_slice(&rho.populations());
        Ok(())
    })
}

/// OFS at each of the `n` ascending `times` for the ideal (noise-free) model.
///
/// # Safety
/// `times` must hold `n` values and `out` be writable for `n`.
#[no_mangle]
pub unsafe extern "C" fn nq_linearity_scan(
    sys: *const NqSystem,
    initial: NqInitialState,
    times: *const f64,
    n: usize,
    out: *mut f64,
) -> NqStatus {
    guard(|| {
        let sys = deref(sys, "sys")?;
        let times = slice(times, n, "times")?;
        let out = slice_mut(out, n, "out")?;
        let init = match initial {
            NqInitialState::PlusX => InitialState::PlusX,
            NqInitialState::PlusY => InitialState::PlusY,
        };
        let r = linearity_scan(&sys.params, init, times, &SimulationMode::Ideal)?;
        out.copy_from_slice(&r.ofs);
        Ok(())
    })
}

/// Iterative Bayesian unfolding of observed (g, e, f) frequencies.
/// `beta` is a row-major 3×3 confusion matrix, or null for the device model.
///
/// # Safety
/// `observed` holds 3 values, `beta` is null or holds 9, `out` is writable for 3.
#[no_mangle]
pub unsafe extern "C" fn nq_ibu_correct(
    observed: *const f64,
    beta: *const f64,
    iterations: usize,
    out: *mut f64,
) -> NqStatus {
    guard(|| {
        let obs = ProbabilityVector::from_weights(read3(observed, "observed")?)?;
        let beta = if beta.is_null() {
            paper_beta()
        } else {
            let b = slice(beta, 9, "beta")?;
            ConfusionMatrix::new([[b[0], b[1], b[2]], [b[3], b[4], b[5]], [b[6], b[7], b[8]]])?
        };
        let out = slice_mut(out, 3, "out")?;
        let p = ibu_correct(&obs, &beta, iterations, &ProbabilityVector::uniform())?;
        out.copy_from_slice(&p.as_array());
        Ok(())
    })
}

/// Bloch vector of the postselected (e, f) state from corrected
/// (g, +a, −a) probabilities for the X, Y and Z settings.
///
/// # Safety
/// Each input holds 3 values; `out` is writable for 3.
#[no_mangle]
pub unsafe extern "C" fn nq_reconstruct_bloch(
    px: *const f64,
    py: *const f64,
    pz: *const f64,
    out: *mut f64,
) -> NqStatus {
    guard(|| {
        let pair = |p: *const f64, what: &str| -> Result<_, Fail> {
            let v = ProbabilityVector::from_weights(read3(p, what)?)?;
            Ok(renormalize_subensemble(&v)?)
        };
        let b = reconstruct_bloch(&pair(px, "px")?, &pair(py, "py")?, &pair(pz, "pz")?);
        slice_mut(out, 3, "out")?.copy_from_slice(&[b.x, b.y, b.z]);
        Ok(())
    })
}

/// Samples `n` quantum-jump trajectories from |e⟩, recorded on `times`.
///
/// # Safety
/// `sys` must be a live handle, `times` hold `n_times` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn nq_ensemble_sample(
    sys: *const NqSystem,
    times: *const f64,
    n_times: usize,
    dt: f64,
    seed: u64,
    n: usize,
    out: *mut *mut NqEnsemble,
) -> NqStatus {
    guard(|| {
        let out = deref_mut(out, "out")?;
        *out = ptr::null_mut();
        let sys = deref(sys, "sys")?;
        let times = slice(times, n_times, "times")?;
        let dt = if dt > 0.0 { dt } else { DEFAULT_DT };
        let stats =
            sample_ensemble(&basis_ket(Level::E, 3)?, &build_three_level_model(&sys.params), times, dt, seed, n)?;
        *out = Box::into_raw(Box::new(NqEnsemble { stats }));
        Ok(())
    })
}

/// # Safety
/// `ens` must be null or a handle from [`nq_ensemble_sample`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nq_ensemble_free(ens: *mut NqEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Fraction of trajectories with no decay to |g⟩ up to time index `k`.
///
/// # Safety
/// `ens` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nq_ensemble_success_fraction(ens: *const NqEnsemble, k: usize, out: *mut f64) -> NqStatus {
    guard(|| {
        let ens = deref(ens, "ens")?;
        let out = deref_mut(out, "out")?;
        if k >= ens.stats.times.len() {
            return Err(Fail(NqStatus::InvalidInput, format!("time index {k} out of range")));
        }
        *out = ens.stats.postselected_fraction(k);
        Ok(())
    })
}

/// Mean Bloch vector of the postselected trajectories at time index `k`,
/// with standard errors. Fails with `Numerical` when none survive.
///
/// # Safety
/// `ens` must be a live handle; `mean` and `sigma` writable for 3 values.
#[no_mangle]
pub unsafe extern "C" fn nq_ensemble_conditioned_bloch(
    ens: *const NqEnsemble,
    k: usize,
    mean: *mut f64,
    sigma: *mut f64,
) -> NqStatus {
    guard(|| {
        let ens = deref(ens, "ens")?;
        let mean = slice_mut(mean, 3, "mean")?;
        let sigma = slice_mut(sigma, 3, "sigma")?;
        if k >= ens.stats.times.len() {
            return Err(Fail(NqStatus::InvalidInput, format!("time index {k} out of range")));
        }
        let (b, s) = ens
            .stats
            .conditioned_bloch(k)
            .ok_or_else(|| Fail(NqStatus::Numerical, "no postselected trajectories".into()))?;
        mean.copy_from_slice(&[b.x, b.y, b.z]);
        sigma.copy_from_slice(&s);
        Ok(())
    })
}
