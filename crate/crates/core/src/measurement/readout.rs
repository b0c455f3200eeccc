//! Three-outcome readout: assignment errors, finite shots and iterative
//! Bayesian unfolding.

use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Probabilities must sum to one within this.
pub const SIMPLEX_TOL: f64 = 1e-12;
/// Row-sum tolerance for a row-stochastic confusion matrix.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Printed row sums of the device matrix are off by up to this much.
pub const DEVICE_ROW_SUM_TOL: f64 = 2e-3;
pub const DEFAULT_IBU_ITERATIONS: usize = 50;

/// Outcome probabilities in (g, e, f) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityVector {
    p: [f64; 3],
}

impl ProbabilityVector {
    pub fn new(p: [f64; 3]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidState(format!("probabilities must be finite and non-negative: {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidState(format!("probabilities sum to {sum}")));
        }
        Ok(Self { p })
    }

    /// Divides non-negative weights by their sum.
    pub fn from_weights(w: [f64; 3]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidState(format!("weights must be finite and non-negative: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::InvalidState("weights sum to zero".into()));
        }
        Ok(Self { p: w.map(|v| v / sum) })
    }

    pub fn uniform() -> Self {
        Self { p: [1.0 / 3.0; 3] }
    }

    pub fn as_array(&self) -> [f64; 3] {
        self.p
    }

    pub fn l1_distance(&self, other: &Self) -> f64 {
        self.p.iter().zip(&other.p).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl std::ops::Index<usize> for ProbabilityVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.p[i]
    }
}

/// β[i][j] = probability of reading j after preparing i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfusionMatrix {
    beta: [[f64; 3]; 3],
    /// Values as supplied, before row renormalization.
    raw: [[f64; 3]; 3],
}

/// Device assignment matrix as printed (rows sum to 1.001, 1.000, 0.999).
pub const DEVICE_BETA_RAW: [[f64; 3]; 3] = [[0.993, 0.003, 0.005], [0.123, 0.871, 0.006], [0.056, 0.018, 0.925]];

impl ConfusionMatrix {
    /// Strict constructor: rows on the simplex within 1e-9.
    pub fn new(beta: [[f64; 3]; 3]) -> Result<Self> {
        Self::with_row_tolerance(beta, ROW_SUM_TOL)
    }

    /// Accepts rows whose sums are within `tol` of one and renormalizes them.
    pub fn with_row_tolerance(raw: [[f64; 3]; 3], tol: f64) -> Result<Self> {
        let mut beta = raw;
        for (i, row) in beta.iter_mut().enumerate() {
            if row.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::param(format!("confusion row {i} has a negative or non-finite entry")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::param(format!("confusion row {i} sums to {sum}")));
            }
            if row[i] <= 0.5 * sum {
                return Err(Error::param(format!("confusion row {i} is not diagonally dominant")));
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Ok(Self { beta, raw })
    }

    pub fn identity() -> Self {
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        Self { beta: id, raw: id }
    }

    pub fn beta(&self) -> &[[f64; 3]; 3] {
        &self.beta
    }

    pub fn raw(&self) -> &[[f64; 3]; 3] {
        &self.raw
    }
}

/// The device matrix, row-renormalized; `raw()` keeps the printed values.
pub fn paper_beta() -> ConfusionMatrix {
    ConfusionMatrix::with_row_tolerance(DEVICE_BETA_RAW, DEVICE_ROW_SUM_TOL).expect("printed matrix is admissible")
}

/// observed_j = Σ_i p_i β_ij
pub fn apply_confusion(p_true: &ProbabilityVector, beta: &ConfusionMatrix) -> ProbabilityVector {
    let mut out = [0.0; 3];
    for (i, row) in beta.beta.iter().enumerate() {
        for (j, b) in row.iter().enumerate() {
            out[j] += p_true.p[i] * b;
        }
    }
    let sum: f64 = out.iter().sum();
    ProbabilityVector { p: out.map(|v| v / sum) }
}

/// Multinomial draw as a chain of conditional binomials.
pub fn sample_counts(p: &ProbabilityVector, shots: u64, seed: u64) -> [u64; 3] {
    let mut rng = rng_from_seed(seed);
    let mut counts = [0u64; 3];
    let mut remaining = shots;
    let mut mass = 1.0;
    for i in 0..2 {
        if remaining == 0 || mass <= 0.0 {
            break;
        }
        let q = (p.p[i] / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q).expect("probability in [0, 1]").sample(&mut rng);
        counts[i] = k;
        remaining -= k;
        mass -= p.p[i];
    }
    counts[2] = remaining;
    counts
}

/// Iterative Bayesian unfolding:
/// p_i ← p_i Σ_j β_ij o_j / (Σ_k p_k β_kj), run exactly `n_iter` times.
pub fn ibu_correct(
    observed: &ProbabilityVector,
    beta: &ConfusionMatrix,
    n_iter: usize,
    prior: &ProbabilityVector,
) -> Result<ProbabilityVector> {
    if prior.p.iter().any(|v| *v <= 0.0) {
        return Err(Error::param("IBU prior must be strictly positive"));
    }
    let b = &beta.beta;
    let mut p = prior.p;
    for _ in 0..n_iter {
        let mut ratio = [0.0; 3];
        for j in 0..3 {
            if observed.p[j] == 0.0 {
                continue;
            }
            let den: f64 = (0..3).map(|k| p[k] * b[k][j]).sum();
            if den <= 0.0 {
                return Err(Error::InconsistentModel { outcome: j });
            }
            ratio[j] = observed.p[j] / den;
        }
        for i in 0..3 {
            p[i] *= (0..3).map(|j| b[i][j] * ratio[j]).sum::<f64>();
        }
        let sum: f64 = p.iter().sum();
        p = p.map(|v| v / sum);
    }
    Ok(ProbabilityVector { p })
}
