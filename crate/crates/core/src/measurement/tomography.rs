//! Three-outcome tomography of the (e, f) manifold: pre-rotation, readout,
//! postselection on not-g and Bloch reconstruction.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use super::readout::{apply_confusion, sample_counts, ConfusionMatrix, ProbabilityVector};
use crate::error::{Error, Result};
use crate::qcore::{Axis, BlochVector, ComplexMatrix, DensityMatrix, C64};

pub use crate::qcore::Axis as TomographyAxis;

/// How Bloch components are read from renormalized outcome pairs.
pub const BLOCH_CONVENTION: &str = "a=2Pn(+a)-1";

/// Smallest not-g probability that still defines a subensemble.
pub const MIN_SUBENSEMBLE: f64 = 1e-12;

/// Pre-measurement rotation, identity on |g⟩. X is exp(+iπσ_y/4) and Y is
/// exp(−iπσ_x/4), mapping |±a⟩ to |e⟩/|f⟩ on the (e, f) block.
pub fn tomography_rotation(axis: Axis) -> ComplexMatrix {
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    let block = match axis {
        Axis::X => ComplexMatrix::from_rows(&[[s, s], [-s, s]]),
        Axis::Y => {
            let mi = C64::new(0.0, -FRAC_1_SQRT_2);
            ComplexMatrix::from_rows(&[[s, mi], [mi, s]])
        }
        Axis::Z => Ok(ComplexMatrix::identity(2)),
    }
    .expect("2x2 rows");
    let mut r = block.embed2(1);
    r[(0, 0)] = C64::new(1.0, 0.0);
    r
}

/// Outcomes of one tomography setting, in (g, +a, −a) order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountsRecord {
    pub axis: Axis,
    pub shots: u64,
    pub counts: [u64; 3],
    /// Set for zero-shot records, which carry exact probabilities.
    pub exact: Option<[f64; 3]>,
}

impl CountsRecord {
    pub fn new(axis: Axis, shots: u64, counts: [u64; 3]) -> Result<Self> {
        if counts.iter().sum::<u64>() != shots {
            return Err(Error::InvalidState(format!("counts {counts:?} do not sum to {shots} shots")));
        }
        Ok(Self { axis, shots, counts, exact: None })
    }

    /// Observed outcome frequencies.
    pub fn frequencies(&self) -> Result<ProbabilityVector> {
        if let Some(p) = self.exact {
            return ProbabilityVector::from_weights(p);
        }
        if self.shots == 0 {
            return Err(Error::InvalidState("record has zero shots".into()));
        }
        ProbabilityVector::from_weights(self.counts.map(|c| c as f64))
    }
}

/// Rotates, reads out through β and samples `shots` outcomes. `shots == 0`
/// returns the exact observed probabilities.
pub fn simulate_tomography(
    rho3: &DensityMatrix,
    axis: Axis,
    beta: &ConfusionMatrix,
    shots: u64,
    seed: u64,
) -> Result<CountsRecord> {
    let p_obs = apply_confusion(&rotated_populations(rho3, axis)?, beta);
    if shots == 0 {
        return Ok(CountsRecord { axis, shots: 0, counts: [0; 3], exact: Some(p_obs.as_array()) });
    }
    Ok(CountsRecord { axis, shots, counts: sample_counts(&p_obs, shots, seed), exact: None })
}

/// diag(RρR†) for the qutrit state.
pub fn rotated_populations(rho3: &DensityMatrix, axis: Axis) -> Result<ProbabilityVector> {
    if rho3.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: rho3.dim() });
    }
    let tr = rho3.trace();
    if (tr - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("tomography needs unit trace, got {tr}")));
    }
    let r = tomography_rotation(axis);
    let rotated = r * *rho3.matrix() * r.adjoint();
    // Round-off can leave tiny negative populations.
    ProbabilityVector::from_weights([0, 1, 2].map(|i| rotated[(i, i)].re.max(0.0)))
}

/// P⁽ⁿ⁾(±a) = P(±a)/(P(+a) + P(−a)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenormalizedPair {
    pub plus: f64,
    pub minus: f64,
    /// P(+a) + P(−a) = 1 − P(g)
    pub success: f64,
}

pub fn renormalize_subensemble(p: &ProbabilityVector) -> Result<RenormalizedPair> {
    let success = p[1] + p[2];
    if success <= MIN_SUBENSEMBLE {
        return Err(Error::EmptyEnsemble(success));
    }
    Ok(RenormalizedPair { plus: p[1] / success, minus: p[2] / success, success })
}

/// Bloch vector with a = 2P⁽ⁿ⁾(+a) − 1, radially projected into the unit
/// ball when shot noise pushes it outside.
pub fn reconstruct_bloch(x: &RenormalizedPair, y: &RenormalizedPair, z: &RenormalizedPair) -> BlochVector {
    let comp = |p: &RenormalizedPair| 2.0 * p.plus / (p.plus + p.minus) - 1.0;
    let mut b = BlochVector { x: comp(x), y: comp(y), z: comp(z) };
    let n = b.norm();
    if n > 1.0 {
        b = BlochVector { x: b.x / n, y: b.y / n, z: b.z / n };
    }
    b
}

/// ρ_ef = ½(𝟙 + xσ_x + yσ_y + zσ_z)
pub fn reconstruct_density(x: &RenormalizedPair, y: &RenormalizedPair, z: &RenormalizedPair) -> DensityMatrix {
    reconstruct_bloch(x, y, z).to_density()
}

/// diag(P(g), P(e), P(f))
pub fn reconstruct_diag3(p: &ProbabilityVector) -> DensityMatrix {
    DensityMatrix::diagonal(&p.as_array()).expect("probability vector is a valid diagonal")
}

/// r = 1/(1 − P(g))
pub fn renormalization_factor(p_g: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_g) {
        return Err(Error::param(format!("P(g) must lie in [0, 1), got {p_g}")));
    }
    Ok(1.0 / (1.0 - p_g))
}
