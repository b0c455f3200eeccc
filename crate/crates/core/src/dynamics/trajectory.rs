//! Quantum-jump unraveling of the master equation.
//!
//! Between jumps the unnormalized ket evolves under
//! H_nj = H − (i/2)ΣL†L. A uniform threshold r is drawn up front; the jump
//! fires on the first step where ‖ψ̃‖² < r. The channel is chosen with
//! weight ⟨ψ|L_j†L_j|ψ⟩, the state resets to L_jψ/‖L_jψ‖, and r is redrawn.

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;

use super::lindblad::check_grid;
use super::model::LindbladModel;
use crate::error::{Error, Result};
use crate::qcore::{matrix_exponential, BlochVector, ComplexMatrix, StateVector, C64};
use crate::rng::{derive_seed, rng_from_seed};

/// Trajectories are reduced in fixed-size chunks so floating-point sums do
/// not depend on thread scheduling.
const REDUCE_CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    /// μs, at the end of the step where the threshold was crossed.
    pub time: f64,
    /// Index into the model's dissipator list.
    pub channel: usize,
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Normalized conditional kets at each recorded time.
    pub states: Vec<StateVector>,
    pub jumps: Vec<JumpEvent>,
    /// True iff no jump into |g⟩ happened by the last recorded time.
    pub postselected: bool,
}

impl TrajectoryRecord {
    /// Time of the first jump that leaves the (e, f) manifold.
    pub fn exit_time(&self, model: &LindbladModel) -> Option<f64> {
        first_exit(&self.jumps, model)
    }
}

fn first_exit(jumps: &[JumpEvent], model: &LindbladModel) -> Option<f64> {
    jumps
        .iter()
        .find(|j| model.dissipators()[j.channel].exits_manifold())
        .map(|j| j.time)
}

/// Step schedule shared by every trajectory of an ensemble.
struct StepPlan {
    propagators: Vec<ComplexMatrix>,
    /// (propagator index, end time)
    steps: Vec<(usize, f64)>,
    /// For each recorded time, the number of steps taken before it.
    record_after: Vec<usize>,
    jump_ops: Vec<ComplexMatrix>,
}

impl StepPlan {
    fn new(model: &LindbladModel, times: &[f64], dt: f64) -> Self {
        let generator = model.no_jump_hamiltonian();
        let mut index: HashMap<u64, usize> = HashMap::new();
        let mut propagators = Vec::new();
        let mut steps = Vec::new();
        let mut record_after = Vec::with_capacity(times.len());
        let mut now = 0.0f64;
        for &target in times {
            while target - now > 1e-12 * dt {
                let remaining = target - now;
                let h = if remaining < dt * (1.0 + 1e-9) { remaining } else { dt };
                let k = *index.entry(h.to_bits()).or_insert_with(|| {
                    propagators.push(matrix_exponential(&generator, h));
                    propagators.len() - 1
                });
                now += h;
                steps.push((k, if remaining == h { target } else { now }));
            }
            now = target;
            record_after.push(steps.len());
        }
        let jump_ops = model.dissipators().iter().map(|d| *d.operator()).collect();
        Self { propagators, steps, record_after, jump_ops }
    }

    /// Runs one trajectory, calling `record(k, state)` at each sample time.
    fn run(&self, psi0: &StateVector, seed: u64, mut record: impl FnMut(usize, &StateVector)) -> Vec<JumpEvent> {
        let mut rng = rng_from_seed(seed);
        let mut threshold: f64 = rng.random();
        let mut phi = *psi0;
        let mut jumps = Vec::new();
        let mut next_record = 0;

        let mut emit = |taken: usize, phi: &StateVector, next_record: &mut usize| {
            while *next_record < self.record_after.len() && self.record_after[*next_record] == taken {
                record(*next_record, &phi.normalized());
                *next_record += 1;
            }
        };
        emit(0, &phi, &mut next_record);

        for (taken, &(k, end_time)) in self.steps.iter().enumerate() {
            phi = self.propagators[k].mul_vec(&phi);
            if phi.norm_sqr() < threshold {
                let psi = phi.normalized();
                let weights: Vec<f64> = self.jump_ops.iter().map(|l| l.mul_vec(&psi).norm_sqr()).collect();
                let total: f64 = weights.iter().sum();
                if total > 0.0 {
                    let mut pick = rng.random::<f64>() * total;
                    let mut channel = weights.len() - 1;
                    for (j, w) in weights.iter().enumerate() {
                        if pick < *w {
                            channel = j;
                            break;
                        }
                        pick -= w;
                    }
                    phi = self.jump_ops[channel].mul_vec(&psi).normalized();
                    jumps.push(JumpEvent { time: end_time, channel });
                } else {
                    phi = psi;
                }
                threshold = rng.random();
            }
            emit(taken + 1, &phi, &mut next_record);
        }
        jumps
    }
}

fn check_inputs(psi0: &StateVector, model: &LindbladModel, dt: f64) -> Result<()> {
    if psi0.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: psi0.dim() });
    }
    if !psi0.is_normalized() {
        return Err(Error::InvalidState("initial state must be normalized".into()));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("trajectory step must be positive"));
    }
    Ok(())
}

/// One trajectory recorded at every step of `dt` up to `horizon`.
pub fn sample_jump_trajectory(
    psi0: &StateVector,
    model: &LindbladModel,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    if !(horizon.is_finite() && horizon >= 0.0) {
        return Err(Error::param("horizon must be non-negative"));
    }
    check_inputs(psi0, model, dt)?;
    let n = (horizon / dt).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    if horizon - times[n] > 1e-12 * dt {
        times.push(horizon);
    }
    sample_jump_trajectory_at(psi0, model, &times, dt, seed)
}

/// One trajectory recorded on a caller-supplied ascending grid.
pub fn sample_jump_trajectory_at(
    psi0: &StateVector,
    model: &LindbladModel,
    times: &[f64],
    dt: f64,
    seed: u64,
) -> Result<TrajectoryRecord> {
    check_inputs(psi0, model, dt)?;
    check_grid(times)?;
    let plan = StepPlan::new(model, times, dt);
    let mut states = Vec::with_capacity(times.len());
    let jumps = plan.run(psi0, seed, |_, psi| states.push(*psi));
    let postselected = first_exit(&jumps, model).is_none();
    Ok(TrajectoryRecord { times: times.to_vec(), states, jumps, postselected })
}

/// Per-trajectory outcome kept by an ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySummary {
    pub index: usize,
    pub seed: u64,
    pub postselected: bool,
    pub jump_count: usize,
    /// Jumps per dissipator channel.
    pub jumps_by_channel: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
struct Moments {
    /// Σ over trajectories of Re/Im of |ψ⟩⟨ψ| entries and their squares.
    sum_re: [f64; 9],
    sum_im: [f64; 9],
    sq_re: [f64; 9],
    sq_im: [f64; 9],
    /// Postselected count and Σ, Σ² of conditioned Bloch components.
    kept: usize,
    bloch: [f64; 3],
    bloch_sq: [f64; 3],
}

impl Moments {
    fn add(&mut self, psi: &StateVector, kept: bool) {
        let n = psi.dim();
        for i in 0..n {
            for j in 0..n {
                let z = psi[i] * psi[j].conj();
                let k = i * 3 + j;
                self.sum_re[k] += z.re;
                self.sum_im[k] += z.im;
                self.sq_re[k] += z.re * z.re;
                self.sq_im[k] += z.im * z.im;
            }
        }
        if kept {
            let b = manifold_bloch(psi);
            self.kept += 1;
            for (a, v) in [b.x, b.y, b.z].iter().enumerate() {
                self.bloch[a] += v;
                self.bloch_sq[a] += v * v;
            }
        }
    }

    fn merge(&mut self, other: &Moments) {
        for k in 0..9 {
            self.sum_re[k] += other.sum_re[k];
            self.sum_im[k] += other.sum_im[k];
            self.sq_re[k] += other.sq_re[k];
            self.sq_im[k] += other.sq_im[k];
        }
        self.kept += other.kept;
        for a in 0..3 {
            self.bloch[a] += other.bloch[a];
            self.bloch_sq[a] += other.bloch_sq[a];
        }
    }
}

/// Bloch vector of the (e, f) part of a qutrit ket.
fn manifold_bloch(psi: &StateVector) -> BlochVector {
    let (ce, cf) = if psi.dim() == 3 { (psi[1], psi[2]) } else { (psi[0], psi[1]) };
    let n = ce.norm_sqr() + cf.norm_sqr();
    let fe = cf * ce.conj();
    BlochVector { x: 2.0 * fe.re / n, y: 2.0 * fe.im / n, z: (ce.norm_sqr() - cf.norm_sqr()) / n }
}

fn mean_and_sigma(sum: f64, sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    let var = if n > 1 { ((sq - nf * mean * mean) / (nf - 1.0)).max(0.0) } else { 0.0 };
    (mean, (var / nf).sqrt())
}

/// Ensemble statistics of a batch of seeded trajectories.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    pub times: Vec<f64>,
    pub n_trajectories: usize,
    pub trajectories: Vec<TrajectorySummary>,
    moments: Vec<Moments>,
    dim: usize,
}

impl EnsembleStats {
    /// Ensemble-averaged |ψ⟩⟨ψ| at sample `k`.
    pub fn mean_density(&self, k: usize) -> ComplexMatrix {
        let m = &self.moments[k];
        let mut out = ComplexMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let idx = i * 3 + j;
                out[(i, j)] = C64::new(m.sum_re[idx], m.sum_im[idx]) / self.n_trajectories as f64;
            }
        }
        out
    }

    /// Standard errors of the mean of Re and Im of entry (i, j) at sample `k`.
    pub fn element_sigma(&self, k: usize, i: usize, j: usize) -> (f64, f64) {
        let m = &self.moments[k];
        let idx = i * 3 + j;
        let n = self.n_trajectories;
        (mean_and_sigma(m.sum_re[idx], m.sq_re[idx], n).1, mean_and_sigma(m.sum_im[idx], m.sq_im[idx], n).1)
    }

    /// Fraction of trajectories with no exit jump by sample `k`.
    pub fn postselected_fraction(&self, k: usize) -> f64 {
        self.moments[k].kept as f64 / self.n_trajectories as f64
    }

    pub fn postselected_count(&self, k: usize) -> usize {
        self.moments[k].kept
    }

    /// Mean conditioned Bloch vector over postselected trajectories, with
    /// per-component standard errors. `None` when nothing survived.
    pub fn conditioned_bloch(&self, k: usize) -> Option<(BlochVector, [f64; 3])> {
        let m = &self.moments[k];
        if m.kept == 0 {
            return None;
        }
        let stats: Vec<(f64, f64)> = (0..3).map(|a| mean_and_sigma(m.bloch[a], m.bloch_sq[a], m.kept)).collect();
        Some((
            BlochVector { x: stats[0].0, y: stats[1].0, z: stats[2].0 },
            [stats[0].1, stats[1].1, stats[2].1],
        ))
    }

    /// Fraction postselected at the end of the run.
    pub fn success_rate(&self) -> f64 {
        self.trajectories.iter().filter(|t| t.postselected).count() as f64 / self.n_trajectories as f64
    }
}

/// Runs `n` trajectories; trajectory `i` uses seed `derive_seed(master_seed, i)`.
pub fn sample_ensemble(
    psi0: &StateVector,
    model: &LindbladModel,
    times: &[f64],
    dt: f64,
    master_seed: u64,
    n: usize,
) -> Result<EnsembleStats> {
    check_inputs(psi0, model, dt)?;
    check_grid(times)?;
    if n == 0 {
        return Err(Error::param("ensemble needs at least one trajectory"));
    }
    let plan = StepPlan::new(model, times, dt);
    let chunks: Vec<(Vec<Moments>, Vec<TrajectorySummary>)> = (0..n.div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut moments = vec![Moments::default(); times.len()];
            let mut summaries = Vec::new();
            for index in c * REDUCE_CHUNK..((c + 1) * REDUCE_CHUNK).min(n) {
                let seed = derive_seed(master_seed, index as u64);
                let mut samples: Vec<StateVector> = Vec::with_capacity(times.len());
                let jumps = plan.run(psi0, seed, |_, psi| samples.push(*psi));
                let exit = first_exit(&jumps, model);
                for (k, psi) in samples.iter().enumerate() {
                    let kept = exit.is_none_or(|te| te > times[k]);
                    moments[k].add(psi, kept);
                }
                let mut by_channel = vec![0; model.dissipators().len()];
                for j in &jumps {
                    by_channel[j.channel] += 1;
                }
                summaries.push(TrajectorySummary {
                    index,
                    seed,
                    postselected: exit.is_none(),
                    jump_count: jumps.len(),
                    jumps_by_channel: by_channel,
                });
            }
            (moments, summaries)
        })
        .collect();

    let mut moments = vec![Moments::default(); times.len()];
    let mut trajectories = Vec::with_capacity(n);
    for (m, s) in chunks {
        for (acc, part) in moments.iter_mut().zip(&m) {
            acc.merge(part);
        }
        trajectories.extend(s);
    }
    Ok(EnsembleStats { times: times.to_vec(), n_trajectories: n, trajectories, moments, dim: model.dim() })
}
