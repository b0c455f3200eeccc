use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::matrix::{check_dim, ComplexMatrix};
use super::{tol, C64};
use crate::error::{Error, Result};

/// Energy eigenstates of the transmon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    G,
    E,
    F,
}

impl Level {
    /// Index in a `dim`-dimensional register: (g, e, f) for the qutrit and
    /// (e, f) for the two-level manifold.
    pub fn index(self, dim: usize) -> Result<usize> {
        match (self, dim) {
            (Level::G, 3) => Ok(0),
            (Level::E, 3) => Ok(1),
            (Level::F, 3) => Ok(2),
            (Level::E, 2) => Ok(0),
            (Level::F, 2) => Ok(1),
            (l, d) => Err(Error::InvalidBasis { label: l.label(), dim: d }),
        }
    }

    pub fn label(self) -> char {
        match self {
            Level::G => 'g',
            Level::E => 'e',
            Level::F => 'f',
        }
    }

    pub fn from_label(label: char) -> Option<Self> {
        match label {
            'g' => Some(Level::G),
            'e' => Some(Level::E),
            'f' => Some(Level::F),
            _ => None,
        }
    }
}

/// A ket of dimension 2 or 3. Not necessarily normalized.
#[derive(Clone, Copy, PartialEq)]
pub struct StateVector {
    dim: usize,
    amps: [C64; 3],
}

/// Basis ket for a label in a register of the given dimension.
pub fn basis_ket(label: Level, dim: usize) -> Result<StateVector> {
    check_dim(dim)?;
    let idx = label.index(dim)?;
    let mut amps = [C64::new(0.0, 0.0); 3];
    amps[idx] = C64::new(1.0, 0.0);
    Ok(StateVector { dim, amps })
}

impl StateVector {
    pub fn new(amplitudes: &[C64]) -> Result<Self> {
        check_dim(amplitudes.len())?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let mut amps = [C64::new(0.0, 0.0); 3];
        amps[..amplitudes.len()].copy_from_slice(amplitudes);
        let v = Self { dim: amplitudes.len(), amps };
        if v.norm_sqr() <= 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(v)
    }

    /// Builds and normalizes.
    pub fn normalized_from(amplitudes: &[C64]) -> Result<Self> {
        Ok(Self::new(amplitudes)?.normalized())
    }

    pub(crate) fn from_raw(dim: usize, amps: [C64; 3]) -> Self {
        Self { dim, amps }
    }

    /// (|e⟩ + e^{iφ}|f⟩)/√2 in the two-level manifold.
    pub fn equator(phase: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_raw(2, [C64::new(s, 0.0), C64::from_polar(s, phase), C64::new(0.0, 0.0)])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps[..self.dim]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes().iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol::NORMALIZED
    }

    pub fn normalized(&self) -> Self {
        self.scale(C64::new(1.0 / self.norm(), 0.0))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = *self;
        for z in out.amps.iter_mut() {
            *z *= s;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut out = *self;
        for (a, b) in out.amps.iter_mut().zip(other.amps.iter()) {
            *a += *b;
        }
        out
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &Self) -> C64 {
        assert_eq!(self.dim, other.dim);
        self.amplitudes()
            .iter()
            .zip(other.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// |⟨a|b⟩| / (‖a‖‖b‖), in [0, 1].
    pub fn overlap(&self, other: &Self) -> f64 {
        (self.inner(other).norm() / (self.norm() * other.norm())).min(1.0)
    }

    pub fn population(&self, idx: usize) -> f64 {
        self.amps[idx].norm_sqr()
    }

    /// Multiplies by the global phase that makes the first non-vanishing
    /// component real and positive.
    pub fn phase_fixed(&self) -> Self {
        let scale = self.norm().max(f64::MIN_POSITIVE);
        match self
            .amplitudes()
            .iter()
            .find(|z| z.norm() > tol::PHASE_NONVANISHING * scale)
        {
            Some(z) => self.scale(z.conj() / z.norm()),
            None => *self,
        }
    }

    /// Lifts a two-level ket into the qutrit register (|g⟩ amplitude zero).
    pub fn embed_in_qutrit(&self) -> Self {
        assert_eq!(self.dim, 2);
        Self::from_raw(3, [C64::new(0.0, 0.0), self.amps[0], self.amps[1]])
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(self, self)
    }
}

impl Index<usize> for StateVector {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        debug_assert!(i < self.dim);
        &self.amps[i]
    }
}

impl IndexMut<usize> for StateVector {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        debug_assert!(i < self.dim);
        &mut self.amps[i]
    }
}

impl fmt::Debug for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.amplitudes()).finish()
    }
}

/// Density operator on the qutrit or the (e, f) manifold. Conditional
/// states may be sub-normalized.
#[derive(Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, positivity and trace.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_finite() {
            return Err(Error::InvalidState("non-finite density matrix".into()));
        }
        let herm = matrix.hermiticity_error();
        if herm > tol::HERMITIAN_STATE {
            return Err(Error::NotHermitian(herm));
        }
        let tr = matrix.trace().re;
        if !(tr > 0.0 && tr <= 1.0 + tol::TRACE) {
            return Err(Error::InvalidState(format!("trace {tr} outside (0, 1]")));
        }
        let eig = super::eig_hermitian(&matrix.hermitian_part())?;
        let min = eig.values[0];
        if min < -tol::PSD {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { matrix })
    }

    /// Wraps an integrator or reconstruction output without validation.
    pub fn from_matrix_unchecked(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn pure(psi: &StateVector) -> Self {
        Self { matrix: psi.normalized().projector() }
    }

    pub fn basis(label: Level, dim: usize) -> Result<Self> {
        Ok(Self::pure(&basis_ket(label, dim)?))
    }

    /// diag(p_0, …) for a classical mixture.
    pub fn diagonal(populations: &[f64]) -> Result<Self> {
        let entries: Vec<C64> = populations.iter().map(|&p| C64::new(p, 0.0)).collect();
        Self::new(ComplexMatrix::diagonal(&entries)?)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn population(&self, idx: usize) -> f64 {
        self.matrix[(idx, idx)].re
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.population(i)).collect()
    }

    /// ⟨ψ|ρ|ψ⟩ for a normalized ψ.
    pub fn fidelity_with_pure(&self, psi: &StateVector) -> f64 {
        psi.normalized().inner(&self.matrix.mul_vec(&psi.normalized())).re
    }

    /// Half the trace norm of the difference.
    pub fn trace_distance(&self, other: &Self) -> Result<f64> {
        let diff = (self.matrix - other.matrix).hermitian_part();
        let eig = super::eig_hermitian(&diff)?;
        Ok(0.5 * eig.values.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// Bloch vector of a two-level state, normalized by its trace.
    pub fn bloch_vector(&self) -> BlochVector {
        assert_eq!(self.dim(), 2, "Bloch vector needs a two-level state");
        let tr = self.trace();
        let fe = self.matrix[(1, 0)];
        BlochVector {
            x: 2.0 * fe.re / tr,
            y: 2.0 * fe.im / tr,
            z: (self.matrix[(0, 0)].re - self.matrix[(1, 1)].re) / tr,
        }
    }
}

impl fmt::Debug for DensityMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DensityMatrix {:?}", self.matrix)
    }
}

/// Expectation values of σ_x, σ_y, σ_z in the (e, f) manifold.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let b = Self { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::InvalidState("non-finite Bloch component".into()));
        }
        if b.norm() > 1.0 + tol::BLOCH_NORM {
            return Err(Error::InvalidState(format!("Bloch norm {} exceeds 1", b.norm())));
        }
        Ok(b)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    /// ½(𝟙 + xσ_x + yσ_y + zσ_z)
    pub fn to_density(&self) -> DensityMatrix {
        let half = 0.5;
        let m = ComplexMatrix::from_rows(&[
            [C64::new(half * (1.0 + self.z), 0.0), C64::new(half * self.x, -half * self.y)],
            [C64::new(half * self.x, half * self.y), C64::new(half * (1.0 - self.z), 0.0)],
        ])
        .expect("2x2 rows");
        DensityMatrix::from_matrix_unchecked(m)
    }
}

/// Physical parameters. Rates in μs⁻¹, couplings in rad/μs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    pub gamma_e: f64,
    pub gamma_f: f64,
    #[serde(rename = "j")]
    pub coupling: f64,
    #[serde(default)]
    pub delta: f64,
}

impl SystemParams {
    /// Measured decay rates of the device, drive at the near-EP point.
    pub const DEVICE_GAMMA_E: f64 = 0.91;
    pub const DEVICE_GAMMA_F: f64 = 0.057;

    pub fn new(gamma_e: f64, gamma_f: f64, coupling: f64, delta: f64) -> Result<Self> {
        let p = Self { gamma_e, gamma_f, coupling, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gamma_e", self.gamma_e),
            ("gamma_f", self.gamma_f),
            ("j", self.coupling),
            ("delta", self.delta),
        ] {
            if !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite")));
            }
        }
        if self.gamma_e < 0.0 || self.gamma_f < 0.0 || self.coupling < 0.0 {
            return Err(Error::param("gamma_e, gamma_f and j must be non-negative"));
        }
        Ok(())
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        Self { coupling, ..*self }
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            gamma_e: Self::DEVICE_GAMMA_E,
            gamma_f: Self::DEVICE_GAMMA_F,
            coupling: 0.24,
            delta: 0.0,
        }
    }
}
