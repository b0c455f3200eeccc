use super::model::EffectiveHamiltonian;
use crate::error::{Error, Result};
use crate::qcore::{matrix_exponential, ComplexMatrix, StateVector, C64};

/// Survival probabilities below this are treated as total postselection
/// failure.
pub const MIN_SURVIVAL: f64 = 1e-300;

/// Normalized no-jump state and the probability of having observed no jump.
#[derive(Debug, Clone, Copy)]
pub struct Propagated {
    pub state: StateVector,
    /// ‖e^{−iH_eff t}ψ₀‖²
    pub survival: f64,
}

fn check_initial(psi0: &StateVector) -> Result<()> {
    if psi0.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: psi0.dim() });
    }
    if !psi0.is_normalized() {
        return Err(Error::InvalidState(format!("initial state norm² {} is not 1", psi0.norm_sqr())));
    }
    Ok(())
}

/// Exact solution of the norm-preserving nonlinear equation
/// i∂ₜψ = (H_eff + i⟨ψ|Γ|ψ⟩)ψ: propagate linearly, then renormalize.
pub fn propagate_nonhermitian(psi0: &StateVector, h: &EffectiveHamiltonian, t: f64) -> Result<Propagated> {
    check_initial(psi0)?;
    if !t.is_finite() {
        return Err(Error::param("propagation time must be finite"));
    }
    let phi = matrix_exponential(h.matrix(), t).mul_vec(psi0);
    normalize_branch(phi, t)
}

fn normalize_branch(phi: StateVector, t: f64) -> Result<Propagated> {
    let survival = phi.norm_sqr();
    if !(survival >= MIN_SURVIVAL) {
        return Err(Error::SurvivalUnderflow(t));
    }
    Ok(Propagated { state: phi.scale(C64::new(1.0 / survival.sqrt(), 0.0)), survival })
}

/// Propagation sampled on an ascending grid, stepping with a cached
/// propagator per distinct interval.
pub fn propagate_series(psi0: &StateVector, h: &EffectiveHamiltonian, times: &[f64]) -> Result<Vec<Propagated>> {
    check_initial(psi0)?;
    super::lindblad::check_grid(times)?;
    let mut out = Vec::with_capacity(times.len());
    let mut phi = *psi0;
    let mut log_survival = 0.0f64;
    let mut now = 0.0;
    let mut cache: Option<(u64, ComplexMatrix)> = None;
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let u = match cache {
                Some((bits, u)) if bits == span.to_bits() => u,
                _ => {
                    let u = matrix_exponential(h.matrix(), span);
                    cache = Some((span.to_bits(), u));
                    u
                }
            };
            phi = u.mul_vec(&phi);
            // Renormalize every interval so long horizons cannot underflow.
            let n2 = phi.norm_sqr();
            if !(n2 > 0.0) {
                return Err(Error::SurvivalUnderflow(t));
            }
            log_survival += n2.ln();
            phi = phi.scale(C64::new(1.0 / n2.sqrt(), 0.0));
        }
        now = t;
        let survival = log_survival.exp();
        if !(survival >= MIN_SURVIVAL) {
            return Err(Error::SurvivalUnderflow(t));
        }
        out.push(Propagated { state: phi, survival });
    }
    Ok(out)
}

/// Direct RK4 integration of i∂ₜψ = (H_eff + i⟨ψ|Γ|ψ⟩)ψ with
/// Γ = i(H_eff − H_eff†)/2. No renormalization is applied, so the norm
/// drift measures integration error.
pub fn integrate_nonlinear_schrodinger(
    psi0: &StateVector,
    h: &EffectiveHamiltonian,
    t: f64,
    dt: f64,
) -> Result<StateVector> {
    check_initial(psi0)?;
    if !(dt.is_finite() && dt > 0.0) || !(t.is_finite() && t >= 0.0) {
        return Err(Error::param("need t >= 0 and dt > 0"));
    }
    let gen = *h.matrix();
    let gamma = h.anti_hermitian_part();
    let f = |psi: &StateVector| -> StateVector {
        let loss = psi.inner(&gamma.mul_vec(psi)).re;
        // −i H ψ + ⟨Γ⟩ ψ
        gen.mul_vec(psi).scale(C64::new(0.0, -1.0)).add(&psi.scale(C64::new(loss, 0.0)))
    };
    let mut psi = *psi0;
    let mut elapsed = 0.0;
    while t - elapsed > 1e-12 * dt {
        let hstep = (t - elapsed).min(dt);
        let k1 = f(&psi);
        let k2 = f(&psi.add(&k1.scale(C64::new(hstep / 2.0, 0.0))));
        let k3 = f(&psi.add(&k2.scale(C64::new(hstep / 2.0, 0.0))));
        let k4 = f(&psi.add(&k3.scale(C64::new(hstep, 0.0))));
        let incr = k1.add(&k2.scale(C64::new(2.0, 0.0))).add(&k3.scale(C64::new(2.0, 0.0))).add(&k4);
        psi = psi.add(&incr.scale(C64::new(hstep / 6.0, 0.0)));
        elapsed += hstep;
    }
    Ok(psi)
}
