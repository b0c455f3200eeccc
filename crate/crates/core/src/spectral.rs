//! Spectrum of the no-jump generator: PT regime, exceptional point and
//! first passage of population from |e⟩ to |f⟩.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::build_effective_hamiltonian;
use crate::error::{Error, Result};
use crate::qcore::{eig_general_2x2, matrix_exponential, StateVector, SystemParams, C64};

/// Default closed-form EP tolerance in rad/μs.
pub const EP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    Unbroken,
    Broken,
    ExceptionalPoint,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Unbroken => "unbroken",
            Regime::Broken => "broken",
            Regime::ExceptionalPoint => "ep",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Eigenvalues of H_eff in rad/μs.
    pub eigenvalues: [C64; 2],
    pub eigenvector_overlap: f64,
    pub j_ep: f64,
    /// ((Δ − iΓ_e/2)/2)² + J², the quadratic's discriminant.
    pub discriminant: C64,
}

/// Classifies the PT phase of H_PT.
///
/// At Δ = 0 the discriminant is real, J² − (Γ_e/4)². With detuning it
/// picks up an imaginary part −iΔΓ_e/4 and no exact EP exists; the regime
/// then follows the sign of its real part and the EP label requires |D| ≤ tol².
pub fn classify_regime(params: &SystemParams, tol: f64) -> Result<RegimeReport> {
    params.validate()?;
    let h = build_effective_hamiltonian(params);
    let eig = eig_general_2x2(h.matrix())?;
    let half_diff = C64::new(params.delta, -params.gamma_e / 2.0) * 0.5;
    let d = half_diff * half_diff + params.coupling * params.coupling;
    let t2 = tol * tol;
    let regime = if d.norm() <= t2 {
        Regime::ExceptionalPoint
    } else if d.re > t2 {
        Regime::Unbroken
    } else if d.re < -t2 {
        Regime::Broken
    } else {
        Regime::ExceptionalPoint
    };
    Ok(RegimeReport {
        regime,
        eigenvalues: eig.values,
        eigenvector_overlap: eig.overlap(),
        j_ep: ep_coupling(params),
        discriminant: d,
    })
}

/// J at the exceptional point for Δ = 0.
pub fn ep_coupling(params: &SystemParams) -> f64 {
    params.gamma_e / 4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FptResult {
    /// μs; `None` when P⁽ⁿ⁾(f) has no strict local maximum inside the horizon.
    pub fpt: Option<f64>,
    /// π/(2J), the Hermitian Rabi transfer time.
    pub hermitian_reference: f64,
    /// π/J, the alternative Hermitian reference, kept for comparison.
    pub pi_over_j: f64,
    pub method: &'static str,
}

pub const FPT_METHOD: &str = "first-strict-local-max+parabolic";

fn check_fpt_inputs(psi0: &StateVector, horizon: f64, dt: f64) -> Result<()> {
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::param(format!("horizon must be positive, got {horizon}")));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param(format!("grid step must be positive, got {dt}")));
    }
    if psi0.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: psi0.dim() });
    }
    if !psi0.is_normalized() {
        return Err(Error::InvalidState("initial state must be normalized".into()));
    }
    Ok(())
}

/// Time of the first strict local maximum of the postselected P⁽ⁿ⁾(f).
pub fn first_passage_time(params: &SystemParams, psi0: &StateVector, horizon: f64, dt: f64) -> Result<FptResult> {
    params.validate()?;
    check_fpt_inputs(psi0, horizon, dt)?;
    let h = build_effective_hamiltonian(params);
    let step = matrix_exponential(h.matrix(), dt);
    let n = (horizon / dt).floor() as usize;

    // Sliding window of three samples; the ket is renormalized each step so
    // long horizons never underflow.
    let mut psi = *psi0;
    let mut prev2 = f64::NAN;
    let mut prev1 = psi.population(1);
    let mut fpt = None;
    for k in 1..=n {
        psi = step.mul_vec(&psi);
        let n2 = psi.norm_sqr();
        if !(n2 > 0.0) {
            return Err(Error::SurvivalUnderflow(k as f64 * dt));
        }
        psi = psi.scale(C64::new(1.0 / n2.sqrt(), 0.0));
        let p = psi.population(1);
        if k >= 2 && prev1 > prev2 && prev1 > p {
            fpt = Some(refine_peak((k - 1) as f64 * dt, dt, prev2, prev1, p));
            break;
        }
        prev2 = prev1;
        prev1 = p;
    }
    let j = params.coupling;
    Ok(FptResult { fpt, hermitian_reference: PI / (2.0 * j), pi_over_j: PI / j, method: FPT_METHOD })
}

/// Vertex of the parabola through (t−h, a), (t, b), (t+h, c).
fn refine_peak(t: f64, h: f64, a: f64, b: f64, c: f64) -> f64 {
    let curvature = a - 2.0 * b + c;
    if curvature >= 0.0 {
        return t;
    }
    let offset = 0.5 * h * (a - c) / curvature;
    t + offset.clamp(-h, h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FptRow {
    pub coupling: f64,
    pub result: FptResult,
}

/// FPT over an ascending J grid, one row per grid point in grid order.
pub fn fpt_sweep(
    params: &SystemParams,
    couplings: &[f64],
    psi0: &StateVector,
    horizon: f64,
    dt: f64,
) -> Result<Vec<FptRow>> {
    check_coupling_grid(couplings)?;
    couplings
        .par_iter()
        .map(|&j| {
            let p = params.with_coupling(j);
            first_passage_time(&p, psi0, horizon, dt).map(|result| FptRow { coupling: j, result })
        })
        .collect()
}

pub(crate) fn check_coupling_grid(couplings: &[f64]) -> Result<()> {
    if couplings.is_empty() {
        return Err(Error::param("J grid is empty"));
    }
    if couplings.iter().any(|j| !j.is_finite() || *j < 0.0) {
        return Err(Error::param("J grid values must be finite and non-negative"));
    }
    if couplings.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("J grid must be strictly ascending"));
    }
    Ok(())
}
