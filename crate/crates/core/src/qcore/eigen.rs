use super::matrix::ComplexMatrix;
use super::state::StateVector;
use super::{tol, C64};
use crate::error::{Error, Result};

const MAX_JACOBI_SWEEPS: usize = 64;

/// Eigen-decomposition of a general complex 2×2 matrix.
#[derive(Debug, Clone, Copy)]
pub struct GeneralEigen2 {
    /// λ₁ = tr/2 + √D, λ₂ = tr/2 − √D with the principal square root.
    pub values: [C64; 2],
    /// Normalized and phase-fixed. Equal at an exceptional point.
    pub vectors: [StateVector; 2],
}

impl GeneralEigen2 {
    /// |⟨v₁|v₂⟩| ∈ [0, 1]; 1 means the eigenvectors have coalesced.
    pub fn overlap(&self) -> f64 {
        self.vectors[0].overlap(&self.vectors[1])
    }

    pub fn is_defective(&self) -> bool {
        self.overlap() > 1.0 - tol::DEFECTIVE_OVERLAP
    }

    pub fn splitting(&self) -> f64 {
        (self.values[0] - self.values[1]).norm()
    }
}

/// Closed-form eigenvalues and eigenvectors of a 2×2 complex matrix.
///
/// At an exact double root with a single eigenvector both returned vectors
/// are that eigenvector; a scalar matrix returns the standard basis.
pub fn eig_general_2x2(m: &ComplexMatrix) -> Result<GeneralEigen2> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: m.dim() });
    }
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let half_diff = (a - d) * 0.5;
    let root = (half_diff * half_diff + b * c).sqrt();
    let values = [half_tr + root, half_tr - root];
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);

    let vector = |sign: f64, fallback: usize| -> StateVector {
        let r = root * sign;
        // (M − λ)v = 0 has solutions (b, λ − a) and (λ − d, c); take the
        // better-conditioned one.
        let lam_minus_a = -half_diff + r;
        let lam_minus_d = half_diff + r;
        let u = [b, lam_minus_a];
        let w = [lam_minus_d, c];
        let nu = u[0].norm_sqr() + u[1].norm_sqr();
        let nw = w[0].norm_sqr() + w[1].norm_sqr();
        let pick = if nu >= nw { (u, nu) } else { (w, nw) };
        if pick.1.sqrt() <= 1e-15 * scale {
            let mut amps = [C64::new(0.0, 0.0); 2];
            amps[fallback] = C64::new(1.0, 0.0);
            return StateVector::new(&amps).expect("basis vector");
        }
        StateVector::new(&pick.0).expect("nonzero eigenvector").normalized().phase_fixed()
    };

    Ok(GeneralEigen2 { values, vectors: [vector(1.0, 0), vector(-1.0, 1)] })
}

/// Spectrum of a Hermitian matrix: real eigenvalues ascending with
/// orthonormal, phase-fixed eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<StateVector>,
}

impl HermitianEigen {
    /// V diag(λ) V†
    pub fn reconstruct(&self) -> ComplexMatrix {
        let dim = self.vectors[0].dim();
        let mut m = ComplexMatrix::zeros(dim);
        for (lam, v) in self.values.iter().zip(&self.vectors) {
            m += v.projector().scale_real(*lam);
        }
        m
    }
}

/// Cyclic complex Jacobi diagonalization.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<HermitianEigen> {
    let herm = m.hermiticity_error();
    if herm > tol::HERMITIAN_INPUT {
        return Err(Error::NotHermitian(herm));
    }
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let threshold = tol::JACOBI_OFF_DIAGONAL * a.frobenius_norm().max(1.0);

    for _ in 0..MAX_JACOBI_SWEEPS {
        if a.off_diagonal_norm() < threshold {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                // Phase rotation makes the pivot real, then a real Jacobi
                // rotation annihilates it.
                let phase = apq / mag;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                let mut u = ComplexMatrix::identity(n);
                u[(p, p)] = C64::new(cs, 0.0);
                u[(p, q)] = C64::new(sn, 0.0);
                u[(q, p)] = phase.conj() * (-sn);
                u[(q, q)] = phase.conj() * cs;
                a = (u.adjoint() * a * u).hermitian_part();
                v = v * u;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let col: Vec<C64> = (0..n).map(|i| v[(i, k)]).collect();
            StateVector::new(&col).expect("unitary column").normalized().phase_fixed()
        })
        .collect();
    Ok(HermitianEigen { values, vectors })
}
