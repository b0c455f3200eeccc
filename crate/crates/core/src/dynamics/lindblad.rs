use super::model::LindbladModel;
use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, DensityMatrix, C64};

/// Default integrator step in μs.
pub const DEFAULT_DT: f64 = 1e-3;

/// Smallest postselection success probability treated as non-empty.
pub const MIN_SUCCESS: f64 = 1e-12;

/// −i[H, ρ] + Σ_j (L_j ρ L_j† − ½{L_j†L_j, ρ})
pub fn lindblad_rhs(rho: &DensityMatrix, model: &LindbladModel) -> Result<ComplexMatrix> {
    check_dims(rho, model)?;
    Ok(rhs(rho.matrix(), model))
}

fn check_dims(rho: &DensityMatrix, model: &LindbladModel) -> Result<()> {
    if rho.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: rho.dim() });
    }
    Ok(())
}

fn rhs(rho: &ComplexMatrix, model: &LindbladModel) -> ComplexMatrix {
    let mut d = model.hamiltonian().commutator(rho).scale(C64::new(0.0, -1.0));
    for diss in model.dissipators() {
        let l = diss.operator();
        d += *l * *rho * l.adjoint();
    }
    d - model.decay_operator().anticommutator(rho).scale_real(0.5)
}

fn rk4_step(rho: &ComplexMatrix, model: &LindbladModel, h: f64) -> ComplexMatrix {
    let k1 = rhs(rho, model);
    let k2 = rhs(&(*rho + k1.scale_real(h / 2.0)), model);
    let k3 = rhs(&(*rho + k2.scale_real(h / 2.0)), model);
    let k4 = rhs(&(*rho + k3.scale_real(h)), model);
    *rho + (k1 + k2.scale_real(2.0) + k3.scale_real(2.0) + k4).scale_real(h / 6.0)
}

fn check_step(dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param(format!("integrator step must be positive, got {dt}")));
    }
    Ok(())
}

/// Advances `rho` by `span` with fixed steps of `dt`; the last step is
/// shortened to land exactly on the target.
fn integrate(mut rho: ComplexMatrix, model: &LindbladModel, span: f64, dt: f64) -> ComplexMatrix {
    let mut elapsed = 0.0;
    while span - elapsed > 1e-12 * dt {
        let remaining = span - elapsed;
        // Merge a trailing sliver into the last step.
        let h = if remaining < dt * (1.0 + 1e-9) { remaining } else { dt };
        rho = rk4_step(&rho, model, h);
        elapsed += h;
    }
    rho
}

/// Classical RK4 solution of the master equation at time `t`.
///
/// The result is re-Hermitized once, at the end. A step larger than `t`
/// degenerates to a single step of size `t`.
pub fn evolve_lindblad(rho0: &DensityMatrix, model: &LindbladModel, t: f64, dt: f64) -> Result<DensityMatrix> {
    check_dims(rho0, model)?;
    check_step(dt)?;
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::param(format!("evolution time must be non-negative, got {t}")));
    }
    if t == 0.0 {
        return Ok(*rho0);
    }
    let rho = integrate(*rho0.matrix(), model, t, dt.min(t));
    Ok(DensityMatrix::from_matrix_unchecked(rho.hermitian_part()))
}

/// Solution sampled on an ascending time grid, integrated in one pass.
pub fn evolve_lindblad_series(
    rho0: &DensityMatrix,
    model: &LindbladModel,
    times: &[f64],
    dt: f64,
) -> Result<Vec<DensityMatrix>> {
    check_dims(rho0, model)?;
    check_step(dt)?;
    check_grid(times)?;
    let mut out = Vec::with_capacity(times.len());
    let mut rho = *rho0.matrix();
    let mut now = 0.0;
    for &t in times {
        rho = integrate(rho, model, t - now, dt);
        now = t;
        out.push(DensityMatrix::from_matrix_unchecked(rho.hermitian_part()));
    }
    Ok(out)
}

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::param("time grid is empty"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::param("time grid must be finite and non-negative"));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::param("time grid must be ascending"));
    }
    Ok(())
}

/// Postselected (no jump into |g⟩) state on the (e, f) manifold.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalState {
    pub rho_ef: DensityMatrix,
    /// 1 − ⟨g|ρ|g⟩
    pub success: f64,
}

pub fn conditional_ef_state(rho3: &DensityMatrix) -> Result<ConditionalState> {
    if rho3.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: rho3.dim() });
    }
    let tr = rho3.trace();
    if !(tr > 0.0 && tr <= 1.0 + crate::qcore::tol::TRACE) {
        return Err(Error::InvalidState(format!("trace {tr} outside (0, 1]")));
    }
    let success = 1.0 - rho3.population(0);
    if success < MIN_SUCCESS {
        return Err(Error::EmptyEnsemble(success));
    }
    let block = rho3.matrix().block2(1).scale_real(1.0 / success);
    Ok(ConditionalState { rho_ef: DensityMatrix::from_matrix_unchecked(block), success })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::build_three_level_model;
    use crate::qcore::{Level, SystemParams};

    fn model(ge: f64, gf: f64, j: f64, d: f64) -> LindbladModel {
        build_three_level_model(&SystemParams::new(ge, gf, j, d).unwrap())
    }

    #[test]
    fn ground_state_is_dark() {
        let rho = DensityMatrix::basis(Level::G, 3).unwrap();
        let d = lindblad_rhs(&rho, &model(0.91, 0.057, 0.4, 0.3)).unwrap();
        assert_eq!(d, ComplexMatrix::zeros(3));
    }

    #[test]
    fn pure_decay_rates() {
        let m = model(0.91, 0.057, 0.0, 0.0);
        let d = lindblad_rhs(&DensityMatrix::basis(Level::E, 3).unwrap(), &m).unwrap();
        assert!((d[(1, 1)].re + 0.91).abs() < 1e-15);
        assert!((d[(0, 0)].re - 0.91).abs() < 1e-15);
        let d = lindblad_rhs(&DensityMatrix::basis(Level::F, 3).unwrap(), &m).unwrap();
        assert!((d[(2, 2)].re + 0.057).abs() < 1e-15);
        assert!((d[(1, 1)].re - 0.057).abs() < 1e-15);
    }

    #[test]
    fn rhs_is_traceless() {
        let m = model(0.91, 0.057, 0.3, 0.1);
        let psi = crate::qcore::StateVector::normalized_from(&[
            C64::new(0.2, 0.1),
            C64::new(0.5, -0.3),
            C64::new(-0.4, 0.6),
        ])
        .unwrap();
        let d = lindblad_rhs(&DensityMatrix::pure(&psi), &m).unwrap();
        assert!(d.trace().norm() < 1e-14);
    }

    #[test]
    fn zero_time_returns_input() {
        let rho = DensityMatrix::basis(Level::E, 3).unwrap();
        assert_eq!(evolve_lindblad(&rho, &model(1.0, 0.1, 1.0, 0.0), 0.0, 1e-3).unwrap(), rho);
    }

    #[test]
    fn exponential_decay() {
        let rho = DensityMatrix::basis(Level::E, 3).unwrap();
        let m = model(0.91, 0.0, 0.0, 0.0);
        for t in [0.5, 2.0, 6.0] {
            let out = evolve_lindblad(&rho, &m, t, DEFAULT_DT).unwrap();
            assert!((out.population(1) - (-0.91 * t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn rabi_oscillation() {
        let rho = DensityMatrix::basis(Level::E, 3).unwrap();
        let j = 0.6;
        let m = model(0.0, 0.0, j, 0.0);
        for t in [0.3, 1.7, 4.0] {
            let out = evolve_lindblad(&rho, &m, t, DEFAULT_DT).unwrap();
            assert!((out.population(2) - (j * t).sin().powi(2)).abs() < 1e-9);
        }
    }

    #[test]
    fn oversized_step_is_single_step() {
        let rho = DensityMatrix::basis(Level::E, 3).unwrap();
        let m = model(0.5, 0.0, 0.0, 0.0);
        let a = evolve_lindblad(&rho, &m, 0.01, 1.0).unwrap();
        let b = evolve_lindblad(&rho, &m, 0.01, 0.01).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_and_positivity_over_long_run() {
        let rho = DensityMatrix::basis(Level::E, 3).unwrap();
        let m = model(0.91, 0.057, 0.24, 0.05);
        let out = evolve_lindblad(&rho, &m, 20.0, DEFAULT_DT).unwrap();
        assert!((out.trace() - 1.0).abs() < 1e-9);
        let eig = crate::qcore::eig_hermitian(out.matrix()).unwrap();
        assert!(eig.values[0] >= -1e-8);
    }

    #[test]
    fn series_matches_single_shot() {
        let rho = DensityMatrix::basis(Level::F, 3).unwrap();
        let m = model(0.91, 0.057, 0.5, 0.0);
        let times = [0.0, 0.25, 1.0, 2.5];
        let series = evolve_lindblad_series(&rho, &m, &times, DEFAULT_DT).unwrap();
        for (t, s) in times.iter().zip(&series) {
            let single = evolve_lindblad(&rho, &m, *t, DEFAULT_DT).unwrap();
            assert!(single.matrix().max_abs_diff(s.matrix()) < 1e-12);
        }
    }

    #[test]
    fn bad_inputs() {
        let rho = DensityMatrix::basis(Level::E, 3).unwrap();
        let m = model(1.0, 0.0, 0.0, 0.0);
        assert!(evolve_lindblad(&rho, &m, 1.0, 0.0).is_err());
        assert!(evolve_lindblad(&rho, &m, -1.0, 0.1).is_err());
        let two = DensityMatrix::basis(Level::E, 2).unwrap();
        assert!(evolve_lindblad(&two, &m, 1.0, 0.1).is_err());
        assert!(evolve_lindblad_series(&rho, &m, &[1.0, 0.5], 0.1).is_err());
    }

    #[test]
    fn conditioning_examples() {
        let c = conditional_ef_state(&DensityMatrix::basis(Level::E, 3).unwrap()).unwrap();
        assert_eq!(c.success, 1.0);
        assert_eq!(c.rho_ef, DensityMatrix::basis(Level::E, 2).unwrap());

        let mixed = DensityMatrix::diagonal(&[0.5, 0.25, 0.25]).unwrap();
        let c = conditional_ef_state(&mixed).unwrap();
        assert_eq!(c.success, 0.5);
        assert_eq!(c.rho_ef.populations(), vec![0.5, 0.5]);

        let g = DensityMatrix::basis(Level::G, 3).unwrap();
        assert!(matches!(conditional_ef_state(&g), Err(Error::EmptyEnsemble(_))));
    }
}
