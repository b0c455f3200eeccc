//! Linearity diagnostics for the postselected dynamics: purification,
//! superposition of separately evolved kets, the overlap metric (OFS),
//! renormalization ratios and classical-mixture tests.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::dynamics::{
    build_effective_hamiltonian, build_three_level_model, check_grid, conditional_ef_state, evolve_lindblad_series,
    propagate_series,
};
use crate::error::{Error, Result};
use crate::measurement::{
    ibu_correct, reconstruct_density, renormalize_subensemble, simulate_tomography, ConfusionMatrix,
    ProbabilityVector, RenormalizedPair, DEFAULT_IBU_ITERATIONS,
};
use crate::qcore::{basis_ket, eig_hermitian, Axis, DensityMatrix, Level, StateVector, SystemParams, C64};
use crate::rng::derive_seed;

/// Eigenvalue gap below which ρ is treated as maximally mixed.
pub const DEGENERACY_GAP: f64 = 1e-12;
/// ‖αψ_a + βψ_b‖ below this is a cancellation error.
pub const MIN_SUPERPOSITION_NORM: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Purified {
    pub state: StateVector,
    /// Largest eigenvalue of ρ.
    pub weight: f64,
    /// True when the spectrum was degenerate and |e⟩ was returned.
    pub degenerate: bool,
}

/// Dominant eigenvector of a two-level density matrix.
pub fn purify(rho_ef: &DensityMatrix) -> Result<Purified> {
    if rho_ef.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: rho_ef.dim() });
    }
    let eig = eig_hermitian(rho_ef.matrix())?;
    let (lo, hi) = (eig.values[0], eig.values[1]);
    if hi - lo < DEGENERACY_GAP {
        return Ok(Purified { state: basis_ket(Level::E, 2)?, weight: hi, degenerate: true });
    }
    Ok(Purified { state: eig.vectors[1], weight: hi, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Superposed {
    pub state: StateVector,
    /// A_s such that A_s(αψ_a + βψ_b)/√(|α|² + |β|²) is normalized.
    pub a_s: f64,
}

pub fn superpose(psi_a: &StateVector, psi_b: &StateVector, alpha: C64, beta: C64) -> Result<Superposed> {
    if psi_a.dim() != psi_b.dim() {
        return Err(Error::DimensionMismatch { expected: psi_a.dim(), got: psi_b.dim() });
    }
    let v = psi_a.scale(alpha).add(&psi_b.scale(beta));
    let n = v.norm();
    if n < MIN_SUPERPOSITION_NORM {
        return Err(Error::Cancellation(n));
    }
    let weight = (alpha.norm_sqr() + beta.norm_sqr()).sqrt();
    Ok(Superposed { state: v.scale(C64::new(1.0 / n, 0.0)), a_s: weight / n })
}

/// |⟨s|m⟩| / (‖s‖‖m‖), clipped to 1.
pub fn ofs(psi_measured: &StateVector, psi_superposed: &StateVector) -> f64 {
    psi_superposed.overlap(psi_measured)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InitialState {
    PlusX,
    PlusY,
}

impl InitialState {
    pub const ALL: [InitialState; 2] = [InitialState::PlusX, InitialState::PlusY];

    pub fn label(self) -> &'static str {
        match self {
            InitialState::PlusX => "+x",
            InitialState::PlusY => "+y",
        }
    }

    /// (α, β) with |θ⟩ = α|e⟩ + β|f⟩.
    pub fn coefficients(self) -> (C64, C64) {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            InitialState::PlusX => (s, s),
            InitialState::PlusY => (s, C64::new(0.0, FRAC_1_SQRT_2)),
        }
    }

    pub fn ket(self) -> StateVector {
        let (a, b) = self.coefficients();
        StateVector::new(&[a, b]).expect("unit superposition")
    }
}

/// Settings of the simulated experiment: Lindblad evolution, tomography
/// with readout error, IBU correction, reconstruction and purification.
#[derive(Debug, Clone, Copy)]
pub struct MeasuredPipeline {
    pub beta: ConfusionMatrix,
    /// Shots per tomography setting; 0 uses exact probabilities.
    pub shots: u64,
    pub seed: u64,
    pub ibu_iterations: usize,
    /// Lindblad integrator step in μs.
    pub dt: f64,
}

impl MeasuredPipeline {
    pub fn new(beta: ConfusionMatrix, shots: u64, seed: u64, dt: f64) -> Self {
        Self { beta, shots, seed, ibu_iterations: DEFAULT_IBU_ITERATIONS, dt }
    }

    fn corrected(&self, freq: &ProbabilityVector) -> Result<ProbabilityVector> {
        ibu_correct(freq, &self.beta, self.ibu_iterations, &ProbabilityVector::uniform())
    }

    /// Renormalized outcome pair for one axis.
    fn pair(&self, rho3: &DensityMatrix, axis: Axis, seed: u64) -> Result<RenormalizedPair> {
        let rec = simulate_tomography(rho3, axis, &self.beta, self.shots, seed)?;
        renormalize_subensemble(&self.corrected(&rec.frequencies()?)?)
    }

    /// Reconstructed postselected ρ_ef from three tomography settings.
    fn reconstruct(&self, rho3: &DensityMatrix, stream: u64) -> Result<DensityMatrix> {
        let mut pairs = [RenormalizedPair { plus: 0.5, minus: 0.5, success: 1.0 }; 3];
        for (k, axis) in Axis::ALL.into_iter().enumerate() {
            pairs[k] = self.pair(rho3, axis, derive_seed(self.seed, stream * 3 + k as u64))?;
        }
        Ok(reconstruct_density(&pairs[0], &pairs[1], &pairs[2]))
    }
}

#[derive(Debug, Clone, Copy)]
pub enum SimulationMode {
    /// Normalized no-jump kets, no measurement.
    Ideal,
    Measured(MeasuredPipeline),
}

impl SimulationMode {
    pub fn name(&self) -> &'static str {
        match self {
            SimulationMode::Ideal => "ideal",
            SimulationMode::Measured(_) => "measured",
        }
    }
}

/// Ket trajectory recovered from (simulated) tomography.
#[derive(Debug, Clone)]
pub struct PureTrajectory {
    pub times: Vec<f64>,
    /// Normalized, phase-fixed.
    pub kets: Vec<StateVector>,
    pub source: String,
    /// Number of samples where purification hit a degenerate spectrum.
    pub degenerate: usize,
}

/// Runs the measured pipeline from a pure (e, f) initial state.
/// `stream` separates random streams of different preparations.
pub fn purified_trajectory(
    params: &SystemParams,
    psi0: &StateVector,
    source: &str,
    times: &[f64],
    pipeline: &MeasuredPipeline,
    stream: u64,
) -> Result<PureTrajectory> {
    check_strict_grid(times)?;
    let model = build_three_level_model(params);
    let rho0 = DensityMatrix::pure(&psi0.embed_in_qutrit());
    let states = evolve_lindblad_series(&rho0, &model, times, pipeline.dt)?;
    let mut kets = Vec::with_capacity(times.len());
    let mut degenerate = 0;
    for (k, rho3) in states.iter().enumerate() {
        let rho_ef = pipeline.reconstruct(rho3, stream * times.len() as u64 + k as u64)?;
        let p = purify(&rho_ef)?;
        degenerate += p.degenerate as usize;
        kets.push(p.state);
    }
    Ok(PureTrajectory { times: times.to_vec(), kets, source: source.to_string(), degenerate })
}

fn check_strict_grid(times: &[f64]) -> Result<()> {
    check_grid(times)?;
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Normalized no-jump kets on a grid, with the physical phase kept.
fn ideal_kets(params: &SystemParams, psi0: &StateVector, times: &[f64]) -> Result<Vec<StateVector>> {
    let h = build_effective_hamiltonian(params);
    Ok(propagate_series(psi0, &h, times)?.into_iter().map(|p| p.state).collect())
}

/// Rotates `ket` by a global phase so ⟨reference|ket⟩ is real and positive.
fn align_phase(ket: &StateVector, reference: &StateVector) -> StateVector {
    let z = ket.inner(reference);
    if z.norm() == 0.0 {
        return *ket;
    }
    ket.scale(z / z.norm())
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearityScanResult {
    pub times: Vec<f64>,
    pub ofs: Vec<f64>,
    pub initial_state: InitialState,
    pub coupling: f64,
    pub mode: &'static str,
    /// Degenerate purifications across the three measured trajectories.
    pub degenerate: usize,
}

impl LinearityScanResult {
    pub fn min_ofs(&self) -> f64 {
        self.ofs.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// OFS between the directly evolved |θ⟩ and the superposition of the
/// separately evolved |e⟩ and |f⟩ with the same (α, β).
///
/// In measured mode the purified |e⟩ and |f⟩ kets carry no phase
/// information, so each is aligned to its ideal counterpart before
/// superposing.
pub fn linearity_scan(
    params: &SystemParams,
    initial: InitialState,
    times: &[f64],
    mode: &SimulationMode,
) -> Result<LinearityScanResult> {
    check_strict_grid(times)?;
    let (alpha, beta) = initial.coefficients();
    let e = basis_ket(Level::E, 2)?;
    let f = basis_ket(Level::F, 2)?;
    let ideal_e = ideal_kets(params, &e, times)?;
    let ideal_f = ideal_kets(params, &f, times)?;
    let (theta, ke, kf, degenerate) = match mode {
        SimulationMode::Ideal => (ideal_kets(params, &initial.ket(), times)?, ideal_e, ideal_f, 0),
        SimulationMode::Measured(pipe) => {
            let stream = match initial {
                InitialState::PlusX => 2,
                InitialState::PlusY => 3,
            };
            let th = purified_trajectory(params, &initial.ket(), initial.label(), times, pipe, stream)?;
            let me = purified_trajectory(params, &e, "e", times, pipe, 0)?;
            let mf = purified_trajectory(params, &f, "f", times, pipe, 1)?;
            let ke = me.kets.iter().zip(&ideal_e).map(|(k, r)| align_phase(k, r)).collect();
            let kf = mf.kets.iter().zip(&ideal_f).map(|(k, r)| align_phase(k, r)).collect();
            (th.kets, ke, kf, th.degenerate + me.degenerate + mf.degenerate)
        }
    };
    let mut values = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let s = superpose(&ke[k], &kf[k], alpha, beta)?;
        values.push(ofs(&theta[k], &s.state));
    }
    Ok(LinearityScanResult {
        times: times.to_vec(),
        ofs: values,
        initial_state: initial,
        coupling: params.coupling,
        mode: mode.name(),
        degenerate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RatioSeries {
    pub times: Vec<f64>,
    /// r_f/r_e = S_e/S_f with S the no-jump survival probability.
    pub ratio: Vec<f64>,
    /// Arithmetic mean over the grid.
    pub time_average: f64,
}

pub fn renorm_ratio_series(params: &SystemParams, times: &[f64]) -> Result<RatioSeries> {
    check_grid(times)?;
    let h = build_effective_hamiltonian(params);
    let se = propagate_series(&basis_ket(Level::E, 2)?, &h, times)?;
    let sf = propagate_series(&basis_ket(Level::F, 2)?, &h, times)?;
    let ratio: Vec<f64> = se.iter().zip(&sf).map(|(a, b)| a.survival / b.survival).collect();
    let time_average = ratio.iter().sum::<f64>() / ratio.len() as f64;
    Ok(RatioSeries { times: times.to_vec(), ratio, time_average })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MixtureSystem {
    TwoLevelPostselected,
    ThreeLevelFull,
}

impl MixtureSystem {
    pub fn label(self) -> &'static str {
        match self {
            MixtureSystem::TwoLevelPostselected => "2lvl",
            MixtureSystem::ThreeLevelFull => "3lvl",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MixtureTestResult {
    pub times: Vec<f64>,
    /// P(e) of the evolved mixture (postselected and renormalized for the
    /// two-level test).
    pub p_mixture: Vec<f64>,
    /// ½P(e) from |e⟩ + ½P(e) from |f⟩, each treated the same way.
    pub p_superposed: Vec<f64>,
    /// |p_mixture − p_superposed|
    pub deviation: Vec<f64>,
    /// Largest deviation over all reported level populations.
    pub level_deviation: Vec<f64>,
    pub system: MixtureSystem,
}

impl MixtureTestResult {
    pub fn max_deviation(&self) -> f64 {
        self.level_deviation.iter().copied().fold(0.0, f64::max)
    }

    fn from_populations(system: MixtureSystem, times: &[f64], mix: &[Vec<f64>], sup: &[Vec<f64>]) -> Self {
        // Column 1 is P(e) for the qutrit, column 0 for the (e, f) pair.
        let col = match system {
            MixtureSystem::TwoLevelPostselected => 0,
            MixtureSystem::ThreeLevelFull => 1,
        };
        let p_mixture: Vec<f64> = mix.iter().map(|p| p[col]).collect();
        let p_superposed: Vec<f64> = sup.iter().map(|p| p[col]).collect();
        let deviation = p_mixture.iter().zip(&p_superposed).map(|(a, b)| (a - b).abs()).collect();
        let level_deviation = mix
            .iter()
            .zip(sup)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
            .collect();
        Self { times: times.to_vec(), p_mixture, p_superposed, deviation, level_deviation, system }
    }
}

/// Lindblad evolution of |e⟩, |f⟩ and the equal mixture of |±x⟩.
struct Preparations {
    e: Vec<DensityMatrix>,
    f: Vec<DensityMatrix>,
    mixture: Vec<DensityMatrix>,
    plus_x: Vec<DensityMatrix>,
    minus_x: Vec<DensityMatrix>,
}

fn evolve_preparations(params: &SystemParams, times: &[f64], dt: f64, sampled: bool) -> Result<Preparations> {
    check_grid(times)?;
    let model = build_three_level_model(params);
    let run = |psi: &StateVector| evolve_lindblad_series(&DensityMatrix::pure(&psi.embed_in_qutrit()), &model, times, dt);
    let e = run(&basis_ket(Level::E, 2)?)?;
    let f = run(&basis_ket(Level::F, 2)?)?;
    // ½|+x⟩⟨+x| + ½|−x⟩⟨−x| is exactly ½𝟙 on the (e, f) block.
    let mixture = evolve_lindblad_series(&DensityMatrix::diagonal(&[0.0, 0.5, 0.5])?, &model, times, dt)?;
    let (plus_x, minus_x) = if sampled {
        (run(&StateVector::equator(0.0))?, run(&StateVector::equator(std::f64::consts::PI))?)
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(Preparations { e, f, mixture, plus_x, minus_x })
}

/// Outcome frequencies along z for the mixture realized as half the shots
/// on |+x⟩ and half on |−x⟩.
fn sampled_mixture_z(pipe: &MeasuredPipeline, plus: &DensityMatrix, minus: &DensityMatrix, stream: u64) -> Result<ProbabilityVector> {
    let beta = &pipe.beta;
    if pipe.shots == 0 {
        let a = simulate_tomography(plus, Axis::Z, beta, 0, 0)?.frequencies()?;
        let b = simulate_tomography(minus, Axis::Z, beta, 0, 0)?.frequencies()?;
        return ProbabilityVector::from_weights([0, 1, 2].map(|i| 0.5 * (a[i] + b[i])));
    }
    let half = pipe.shots / 2;
    let a = simulate_tomography(plus, Axis::Z, beta, half, derive_seed(pipe.seed, 2 * stream))?;
    let b = simulate_tomography(minus, Axis::Z, beta, pipe.shots - half, derive_seed(pipe.seed, 2 * stream + 1))?;
    ProbabilityVector::from_weights([0, 1, 2].map(|i| (a.counts[i] + b.counts[i]) as f64))
}

/// Measured z populations (g, e, f) after IBU.
fn measured_z(pipe: &MeasuredPipeline, rho3: &DensityMatrix, stream: u64) -> Result<ProbabilityVector> {
    let rec = simulate_tomography(rho3, Axis::Z, &pipe.beta, pipe.shots, derive_seed(pipe.seed, stream))?;
    pipe.corrected(&rec.frequencies()?)
}

fn postselected_pe(p: &ProbabilityVector) -> Result<Vec<f64>> {
    let pair = renormalize_subensemble(p)?;
    Ok(vec![pair.plus, pair.minus])
}

/// Mixture vs. averaged evolutions after postselection on the (e, f)
/// manifold. `dt` is the Lindblad integrator step.
pub fn mixture_test_2level(
    params: &SystemParams,
    times: &[f64],
    mode: &SimulationMode,
    dt: f64,
) -> Result<MixtureTestResult> {
    mixture_test(params, times, mode, dt, MixtureSystem::TwoLevelPostselected)
}

/// Mixture vs. averaged evolutions on the full qutrit, no postselection.
pub fn mixture_test_3level(
    params: &SystemParams,
    times: &[f64],
    mode: &SimulationMode,
    dt: f64,
) -> Result<MixtureTestResult> {
    mixture_test(params, times, mode, dt, MixtureSystem::ThreeLevelFull)
}

fn mixture_test(
    params: &SystemParams,
    times: &[f64],
    mode: &SimulationMode,
    dt: f64,
    system: MixtureSystem,
) -> Result<MixtureTestResult> {
    let two = system == MixtureSystem::TwoLevelPostselected;
    let prep = evolve_preparations(params, times, dt, matches!(mode, SimulationMode::Measured(_)))?;
    let n = times.len();
    let mut mix = Vec::with_capacity(n);
    let mut sup = Vec::with_capacity(n);
    for k in 0..n {
        let (pm, pe, pf) = match mode {
            SimulationMode::Ideal => {
                if two {
                    let c = |r: &DensityMatrix| conditional_ef_state(r).map(|c| c.rho_ef.populations());
                    (c(&prep.mixture[k])?, c(&prep.e[k])?, c(&prep.f[k])?)
                } else {
                    (prep.mixture[k].populations(), prep.e[k].populations(), prep.f[k].populations())
                }
            }
            SimulationMode::Measured(pipe) => {
                let base = 4 * k as u64;
                let m = pipe.corrected(&sampled_mixture_z(pipe, &prep.plus_x[k], &prep.minus_x[k], base)?)?;
                let e = measured_z(pipe, &prep.e[k], base + 2)?;
                let f = measured_z(pipe, &prep.f[k], base + 3)?;
                if two {
                    (postselected_pe(&m)?, postselected_pe(&e)?, postselected_pe(&f)?)
                } else {
                    (m.as_array().to_vec(), e.as_array().to_vec(), f.as_array().to_vec())
                }
            }
        };
        sup.push(pe.iter().zip(&pf).map(|(a, b)| 0.5 * a + 0.5 * b).collect());
        mix.push(pm);
    }
    Ok(MixtureTestResult::from_populations(system, times, &mix, &sup))
}

/// Uniform grid 0, dt, 2dt, … up to `horizon` (inclusive within 1e-9·dt).
pub fn uniform_grid(horizon: f64, dt: f64) -> Result<Vec<f64>> {
    if !(horizon.is_finite() && horizon >= 0.0 && dt.is_finite() && dt > 0.0) {
        return Err(Error::param("grid needs horizon >= 0 and dt > 0"));
    }
    let n = (horizon / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::DEFAULT_DT;
    use crate::measurement::paper_beta;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn params(ge: f64, gf: f64, j: f64) -> SystemParams {
        SystemParams::new(ge, gf, j, 0.0).unwrap()
    }

    fn grid() -> Vec<f64> {
        uniform_grid(6.0, 0.05).unwrap()
    }

    #[test]
    fn purify_examples() {
        let psi = StateVector::normalized_from(&[c(0.3, 0.2), c(-0.5, 0.7)]).unwrap();
        let p = purify(&DensityMatrix::pure(&psi)).unwrap();
        assert!(p.state.overlap(&psi) > 1.0 - 1e-12);
        assert!(!p.degenerate);
        let p = purify(&DensityMatrix::diagonal(&[0.8, 0.2]).unwrap()).unwrap();
        assert_eq!(p.state, basis_ket(Level::E, 2).unwrap());
        let p = purify(&DensityMatrix::diagonal(&[0.5, 0.5]).unwrap()).unwrap();
        assert!(p.degenerate);
        assert_eq!(p.state, basis_ket(Level::E, 2).unwrap());
    }

    #[test]
    fn superpose_examples() {
        let e = basis_ket(Level::E, 2).unwrap();
        let f = basis_ket(Level::F, 2).unwrap();
        let s = FRAC_1_SQRT_2;
        let r = superpose(&e, &f, c(s, 0.0), c(s, 0.0)).unwrap();
        assert!((r.a_s - 1.0).abs() < 1e-15);
        let r = superpose(&e, &e, c(s, 0.0), c(s, 0.0)).unwrap();
        assert!((r.a_s - s).abs() < 1e-15);
        assert!(r.state.overlap(&e) > 1.0 - 1e-15);

        let b = StateVector::equator(0.0);
        let r = superpose(&e, &b, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let direct = e.add(&b);
        assert!((r.a_s - 2f64.sqrt() / direct.norm()).abs() < 1e-15);
        let check = direct.scale(c(r.a_s / 2f64.sqrt(), 0.0));
        assert!((check.norm_sqr() - 1.0).abs() < 1e-15);

        assert!(matches!(superpose(&e, &e, c(1.0, 0.0), c(-1.0, 0.0)), Err(Error::Cancellation(_))));
    }

    #[test]
    fn ofs_examples() {
        let e = basis_ket(Level::E, 2).unwrap();
        let f = basis_ket(Level::F, 2).unwrap();
        assert!((ofs(&e, &e) - 1.0).abs() < 1e-15);
        assert_eq!(ofs(&e, &f), 0.0);
        assert!((ofs(&StateVector::equator(0.0), &e) - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn ofs_symmetric_and_phase_blind(
            a in prop::array::uniform4(-1.0f64..1.0),
            b in prop::array::uniform4(-1.0f64..1.0),
            p1 in 0.0f64..6.3, p2 in 0.0f64..6.3,
        ) {
            let u = StateVector::new(&[c(a[0], a[1]), c(a[2], a[3])]);
            let v = StateVector::new(&[c(b[0], b[1]), c(b[2], b[3])]);
            prop_assume!(u.is_ok() && v.is_ok());
            let (u, v) = (u.unwrap(), v.unwrap());
            prop_assume!(u.norm() > 1e-3 && v.norm() > 1e-3);
            let base = ofs(&u, &v);
            prop_assert!((base - ofs(&v, &u)).abs() < 1e-14);
            let rotated = ofs(&u.scale(C64::from_polar(1.0, p1)), &v.scale(C64::from_polar(1.0, p2)));
            prop_assert!((base - rotated).abs() < 1e-14);
            prop_assert!((0.0..=1.0).contains(&base));
        }

        #[test]
        fn purify_inverts_projector(a in prop::array::uniform4(-1.0f64..1.0)) {
            let psi = StateVector::new(&[c(a[0], a[1]), c(a[2], a[3])]);
            prop_assume!(psi.is_ok());
            let psi = psi.unwrap();
            prop_assume!(psi.norm() > 1e-3);
            let psi = psi.normalized();
            let p = purify(&DensityMatrix::pure(&psi)).unwrap();
            prop_assert!(p.state.overlap(&psi).powi(2) >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn hermitian_scan_is_linear() {
        for init in InitialState::ALL {
            let r = linearity_scan(&params(0.0, 0.0, 0.7), init, &grid(), &SimulationMode::Ideal).unwrap();
            assert!(r.ofs.iter().all(|v| (v - 1.0).abs() < 1e-12), "{:?}", r.min_ofs());
        }
    }

    // Minimum OFS on a 0.05 μs grid over [0, 6] μs, from an independent
    // matrix-exponential evaluation.
    #[test]
    fn frozen_min_ofs() {
        let cases = [
            (1.0, InitialState::PlusX, 0.9940453417),
            (1.0, InitialState::PlusY, 0.9897264150),
            (0.15, InitialState::PlusX, 0.9243183374),
            (0.15, InitialState::PlusY, 0.2641661371),
        ];
        for (j, init, want) in cases {
            let r = linearity_scan(&params(0.91, 0.057, j), init, &grid(), &SimulationMode::Ideal).unwrap();
            assert!((r.min_ofs() - want).abs() < 1e-8, "J={j} {}: {}", init.label(), r.min_ofs());
        }
    }

    #[test]
    fn exact_measured_pipeline_without_gamma_f_matches_ideal() {
        // With Γ_f = 0, exact probabilities and a perfect readout the
        // measured pipeline only adds integrator error.
        let p = params(0.91, 0.0, 0.5);
        let pipe = MeasuredPipeline::new(ConfusionMatrix::identity(), 0, 1, DEFAULT_DT);
        let times = uniform_grid(6.0, 0.5).unwrap();
        for init in InitialState::ALL {
            let ideal = linearity_scan(&p, init, &times, &SimulationMode::Ideal).unwrap();
            let meas = linearity_scan(&p, init, &times, &SimulationMode::Measured(pipe)).unwrap();
            for (a, b) in ideal.ofs.iter().zip(&meas.ofs) {
                assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn measured_pipeline_is_seeded() {
        let p = params(0.91, 0.057, 1.0);
        let pipe = MeasuredPipeline::new(paper_beta(), 2000, 17, 1e-2);
        let times = uniform_grid(3.0, 0.5).unwrap();
        let a = linearity_scan(&p, InitialState::PlusX, &times, &SimulationMode::Measured(pipe)).unwrap();
        let b = linearity_scan(&p, InitialState::PlusX, &times, &SimulationMode::Measured(pipe)).unwrap();
        assert_eq!(a.ofs, b.ofs);
        assert!(a.ofs.iter().all(|v| (0.0..=1.0).contains(v)));
        // Readout noise costs some overlap but the unbroken regime stays near 1.
        assert!(a.min_ofs() > 0.8, "{}", a.min_ofs());
    }

    #[test]
    fn ratio_examples() {
        let r = renorm_ratio_series(&params(0.0, 0.0, 0.4), &uniform_grid(10.0, 0.05).unwrap()).unwrap();
        assert!(r.ratio.iter().all(|v| (v - 1.0).abs() < 1e-12));

        let r = renorm_ratio_series(&params(0.91, 0.057, 0.5), &uniform_grid(10.0, 0.05).unwrap()).unwrap();
        let crossings = r.ratio.windows(2).filter(|w| (w[0] - 1.0) * (w[1] - 1.0) < 0.0).count();
        assert!(crossings >= 2);

        let r = renorm_ratio_series(&params(0.91, 0.057, 1.0), &uniform_grid(10.0, 0.05).unwrap()).unwrap();
        assert!((r.time_average - 1.04447).abs() < 1e-4, "{}", r.time_average);
    }

    #[test]
    fn broken_regime_ratio_falls_far_below_one() {
        let r = renorm_ratio_series(&params(0.91, 0.057, 0.1), &uniform_grid(10.0, 0.05).unwrap()).unwrap();
        let (k_min, v_min) = r.ratio.iter().enumerate().fold((0, f64::INFINITY), |acc, (k, v)| if *v < acc.1 { (k, *v) } else { acc });
        assert!((v_min - 0.04420).abs() < 1e-4, "{v_min}");
        assert!((r.times[k_min] - 5.7).abs() < 0.1);
        // Decreasing over the transient that follows t = 2 μs.
        let from = r.times.iter().position(|t| *t >= 2.0).unwrap();
        assert!(r.ratio[from..=k_min].windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn ratio_average_approaches_one() {
        // The finite-window average oscillates with J, so only its envelope
        // shrinks: compare the worst deviation on successive J bands.
        let times = uniform_grid(10.0, 0.05).unwrap();
        let worst = |lo: f64, hi: f64| {
            (0..=20)
                .map(|k| lo + (hi - lo) * k as f64 / 20.0)
                .map(|j| (renorm_ratio_series(&params(0.91, 0.0, j), &times).unwrap().time_average - 1.0).abs())
                .fold(0.0, f64::max)
        };
        let bands = [worst(0.5, 1.0), worst(2.0, 4.0), worst(6.0, 8.0)];
        assert!(bands.windows(2).all(|w| w[1] < w[0]), "{bands:?}");
        assert!(bands[2] < 5e-3, "{bands:?}");
    }

    #[test]
    fn mixture_contrast() {
        let p = params(0.91, 0.057, 0.5);
        let times = grid();
        let two = mixture_test_2level(&p, &times, &SimulationMode::Ideal, DEFAULT_DT).unwrap();
        let three = mixture_test_3level(&p, &times, &SimulationMode::Ideal, DEFAULT_DT).unwrap();
        assert_eq!(two.deviation[0], 0.0);
        assert_eq!(three.deviation[0], 0.0);
        assert!((two.max_deviation() - 0.1024).abs() < 1e-3, "{}", two.max_deviation());
        assert!(three.max_deviation() < 1e-9);
        for (k, d) in two.deviation.iter().enumerate() {
            assert_eq!(*d, (two.p_mixture[k] - two.p_superposed[k]).abs());
        }
    }

    #[test]
    fn hermitian_mixture_has_no_deviation() {
        let r = mixture_test_2level(&params(0.0, 0.0, 0.5), &grid(), &SimulationMode::Ideal, DEFAULT_DT).unwrap();
        assert!(r.max_deviation() < 1e-12);
    }

    #[test]
    fn measured_mixture_reproduces_contrast() {
        let p = params(0.91, 0.057, 0.5);
        let pipe = MeasuredPipeline::new(paper_beta(), 20_000, 5, 1e-2);
        let times = uniform_grid(6.0, 0.25).unwrap();
        let two = mixture_test_2level(&p, &times, &SimulationMode::Measured(pipe), 1e-2).unwrap();
        let three = mixture_test_3level(&p, &times, &SimulationMode::Measured(pipe), 1e-2).unwrap();
        assert!(two.max_deviation() > 0.05);
        // Shot noise only: a few percent at 10⁴ shots per preparation.
        assert!(three.max_deviation() < 0.03, "{}", three.max_deviation());
    }

    #[test]
    fn rejects_bad_grids() {
        let p = params(0.91, 0.057, 0.5);
        assert!(linearity_scan(&p, InitialState::PlusX, &[], &SimulationMode::Ideal).is_err());
        assert!(linearity_scan(&p, InitialState::PlusX, &[0.0, 0.0], &SimulationMode::Ideal).is_err());
        assert!(renorm_ratio_series(&p, &[1.0, 0.5]).is_err());
    }
}
