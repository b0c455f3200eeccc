//! Small dense complex linear algebra and quantum state types.
//!
//! Everything here is fixed to dimension 2 (the (e, f) manifold) or 3 (the
//! full g, e, f qutrit). Basis ordering is (g, e, f) for the qutrit and
//! (e, f) for the manifold.

mod eigen;
mod expm;
mod matrix;
mod state;

pub use eigen::{eig_general_2x2, eig_hermitian, GeneralEigen2, HermitianEigen};
pub use expm::{exp_taylor, matrix_exponential};
pub use matrix::ComplexMatrix;
pub use state::{basis_ket, BlochVector, DensityMatrix, Level, StateVector, SystemParams};

use serde::{Deserialize, Serialize};

pub type C64 = num_complex::Complex64;

/// Numerical tolerances shared across the crate.
pub mod tol {
    /// |‖ψ‖² − 1| for a state to count as normalized.
    pub const NORMALIZED: f64 = 1e-12;
    /// Elementwise Hermiticity of a validated density matrix.
    pub const HERMITIAN_STATE: f64 = 1e-12;
    /// Hermiticity accepted by the Hermitian eigensolver.
    pub const HERMITIAN_INPUT: f64 = 1e-10;
    /// Smallest eigenvalue allowed in a density matrix.
    pub const PSD: f64 = 1e-10;
    /// Slack on trace ≤ 1.
    pub const TRACE: f64 = 1e-12;
    pub const BLOCH_NORM: f64 = 1e-9;
    /// Jacobi stops once the off-diagonal Frobenius norm falls below this
    /// (scaled by max(1, ‖M‖_F)).
    pub const JACOBI_OFF_DIAGONAL: f64 = 1e-14;
    /// A component smaller than this fraction of the norm is "vanishing"
    /// for the phase convention.
    pub const PHASE_NONVANISHING: f64 = 1e-12;
    /// Eigenvector overlap above which the closed-form 2×2 exponential
    /// falls back to the series.
    pub const EXPM_PARALLEL: f64 = 1e-8;
    /// Eigenvector overlap above which a 2×2 matrix is flagged defective.
    pub const DEFECTIVE_OVERLAP: f64 = 1e-6;
}

/// Pauli axis in the (e, f) manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "X",
            Axis::Y => "Y",
            Axis::Z => "Z",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "X" | "x" => Some(Axis::X),
            "Y" | "y" => Some(Axis::Y),
            "Z" | "z" => Some(Axis::Z),
            _ => None,
        }
    }
}

/// Pauli matrix in (|e⟩, |f⟩) ordering: σ_z = |e⟩⟨e| − |f⟩⟨f|,
/// σ_x = |e⟩⟨f| + |f⟩⟨e|, σ_y = −i|e⟩⟨f| + i|f⟩⟨e|.
pub fn pauli(axis: Axis) -> ComplexMatrix {
    let o = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let rows = match axis {
        Axis::X => [[o, one], [one, o]],
        Axis::Y => [[o, -i], [i, o]],
        Axis::Z => [[one, o], [o, -one]],
    };
    ComplexMatrix::from_rows(&rows).expect("2x2 Pauli")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn basis_kets_follow_ordering() {
        let e2 = basis_ket(Level::E, 2).unwrap();
        assert_eq!(e2.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let f3 = basis_ket(Level::F, 3).unwrap();
        assert_eq!(f3.amplitudes(), &[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(basis_ket(Level::G, 2), Err(crate::Error::InvalidBasis { .. })));
        assert!(matches!(basis_ket(Level::E, 4), Err(crate::Error::InvalidDimension(4))));
    }

    #[test]
    fn pauli_definitions() {
        let z = pauli(Axis::Z);
        assert_eq!(z, ComplexMatrix::diagonal(&[c(1.0, 0.0), c(-1.0, 0.0)]).unwrap());
        let x = pauli(Axis::X);
        assert_eq!(x[(0, 1)], c(1.0, 0.0));
        assert_eq!(x[(1, 0)], c(1.0, 0.0));
        assert_eq!(x[(0, 0)], c(0.0, 0.0));
        let y = pauli(Axis::Y);
        assert_eq!(y * y, ComplexMatrix::identity(2));
    }

    #[test]
    fn pauli_algebra_is_exact() {
        // σ_a σ_b = δ_ab 𝟙 + i ε_abc σ_c
        let axes = Axis::ALL;
        for (a, &sa) in axes.iter().enumerate() {
            for (b, &sb) in axes.iter().enumerate() {
                let product = pauli(sa) * pauli(sb);
                let mut expected = if a == b {
                    ComplexMatrix::identity(2)
                } else {
                    ComplexMatrix::zeros(2)
                };
                for (cidx, &sc) in axes.iter().enumerate() {
                    let eps = levi_civita(a, b, cidx);
                    if eps != 0.0 {
                        expected += pauli(sc).scale(c(0.0, eps));
                    }
                }
                assert_eq!(product, expected, "σ_{a} σ_{b}");
            }
        }
    }

    fn levi_civita(a: usize, b: usize, c: usize) -> f64 {
        match (a, b, c) {
            (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
            (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
            _ => 0.0,
        }
    }

    #[test]
    fn density_validation_rejects_bad_input() {
        let not_herm = ComplexMatrix::from_rows(&[[c(0.5, 0.0), c(0.1, 0.0)], [c(0.0, 0.0), c(0.5, 0.0)]])
            .unwrap();
        assert!(matches!(DensityMatrix::new(not_herm), Err(crate::Error::NotHermitian(_))));
        let negative = ComplexMatrix::diagonal(&[c(1.2, 0.0), c(-0.2, 0.0)]).unwrap();
        assert!(DensityMatrix::new(negative).is_err());
        let over = ComplexMatrix::diagonal(&[c(0.7, 0.0), c(0.7, 0.0)]).unwrap();
        assert!(DensityMatrix::new(over).is_err());
        let sub = ComplexMatrix::diagonal(&[c(0.0, 0.0), c(0.3, 0.0), c(0.2, 0.0)]).unwrap();
        assert!(DensityMatrix::new(sub).is_ok());
    }

    #[test]
    fn bloch_round_trip() {
        let b = BlochVector::new(0.3, -0.4, 0.5).unwrap();
        let rho = b.to_density();
        let back = rho.bloch_vector();
        assert!((back.x - 0.3).abs() < 1e-15);
        assert!((back.y + 0.4).abs() < 1e-15);
        assert!((back.z - 0.5).abs() < 1e-15);
        // ⟨σ_a⟩ = tr(ρ σ_a)
        for (axis, expect) in [(Axis::X, 0.3), (Axis::Y, -0.4), (Axis::Z, 0.5)] {
            let ev = (*rho.matrix() * pauli(axis)).trace();
            assert!((ev.re - expect).abs() < 1e-15 && ev.im.abs() < 1e-15);
        }
        assert!(BlochVector::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn phase_fix_makes_first_component_real_positive() {
        let v = StateVector::new(&[c(0.0, 0.0), c(0.0, -2.0), c(1.0, 1.0)]).unwrap();
        let f = v.phase_fixed();
        assert!(f[0].norm() == 0.0);
        assert!(f[1].im.abs() < 1e-15 && f[1].re > 0.0);
        assert!((f.norm() - v.norm()).abs() < 1e-14);
    }

    #[test]
    fn trace_distance_of_orthogonal_pure_states_is_one() {
        let e = DensityMatrix::basis(Level::E, 2).unwrap();
        let f = DensityMatrix::basis(Level::F, 2).unwrap();
        assert!((e.trace_distance(&f).unwrap() - 1.0).abs() < 1e-14);
        assert!(e.trace_distance(&e).unwrap().abs() < 1e-15);
    }
}
