use super::eigen::eig_general_2x2;
use super::matrix::ComplexMatrix;
use super::{tol, C64};

const MAX_TAYLOR_TERMS: usize = 40;

/// Propagator exp(−i M t).
///
/// For 2×2 matrices with well-separated eigenvectors this is the closed form
/// V e^{−iΛt} V⁻¹; near a defective point (and always for 3×3) it uses
/// scaling-and-squaring on the Taylor series.
pub fn matrix_exponential(m: &ComplexMatrix, t: f64) -> ComplexMatrix {
    if t == 0.0 {
        return ComplexMatrix::identity(m.dim());
    }
    let generator = m.scale(C64::new(0.0, -t));
    if m.dim() == 2 {
        if let Some(u) = exp_2x2_eigen(&generator) {
            return u;
        }
    }
    exp_taylor(&generator)
}

fn exp_2x2_eigen(a: &ComplexMatrix) -> Option<ComplexMatrix> {
    let eig = eig_general_2x2(a).ok()?;
    if eig.overlap() > 1.0 - tol::EXPM_PARALLEL {
        return None;
    }
    let [v1, v2] = eig.vectors;
    let (a00, a01, a10, a11) = (v1[0], v2[0], v1[1], v2[1]);
    let det = a00 * a11 - a01 * a10;
    let e1 = eig.values[0].exp();
    let e2 = eig.values[1].exp();
    // V diag(e1, e2) V⁻¹ with V = [v1 v2] and V⁻¹ = adj(V)/det
    let inv = [[a11 / det, -a01 / det], [-a10 / det, a00 / det]];
    let vd = [[a00 * e1, a01 * e2], [a10 * e1, a11 * e2]];
    let mut out = ComplexMatrix::zeros(2);
    for i in 0..2 {
        for j in 0..2 {
            out[(i, j)] = vd[i][0] * inv[0][j] + vd[i][1] * inv[1][j];
        }
    }
    out.is_finite().then_some(out)
}

/// exp(A) by scaling-and-squaring with a truncated Taylor series.
pub fn exp_taylor(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim();
    let norm = a.one_norm();
    let mut squarings = 0u32;
    while norm / f64::from(1u32 << squarings.min(30)) > 0.5 && squarings < 60 {
        squarings += 1;
    }
    let x = a.scale_real(0.5f64.powi(squarings as i32));

    let mut sum = ComplexMatrix::identity(n);
    let mut term = ComplexMatrix::identity(n);
    for k in 1..=MAX_TAYLOR_TERMS {
        term = (term * x).scale_real(1.0 / k as f64);
        sum += term;
        if term.frobenius_norm() <= 1e-18 * sum.frobenius_norm() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{pauli, Axis};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// Plain Taylor series with no scaling; the oracle for small ‖Mt‖.
    fn series_oracle(m: &ComplexMatrix, t: f64, terms: usize) -> ComplexMatrix {
        let a = m.scale(c(0.0, -t));
        let mut sum = ComplexMatrix::identity(m.dim());
        let mut term = ComplexMatrix::identity(m.dim());
        for k in 1..terms {
            term = (term * a).scale_real(1.0 / k as f64);
            sum += term;
        }
        sum
    }

    #[test]
    fn zero_time_is_identity() {
        let m = ComplexMatrix::from_rows(&[[c(1.0, 2.0), c(3.0, 0.0)], [c(0.0, 1.0), c(-1.0, 0.0)]]).unwrap();
        assert_eq!(matrix_exponential(&m, 0.0), ComplexMatrix::identity(2));
        assert_eq!(matrix_exponential(&ComplexMatrix::identity(3), 0.0), ComplexMatrix::identity(3));
    }

    #[test]
    fn rabi_half_period() {
        let j = 0.37;
        let m = pauli(Axis::X).scale_real(j);
        let u = matrix_exponential(&m, std::f64::consts::PI / (2.0 * j));
        let expected = pauli(Axis::X).scale(c(0.0, -1.0));
        assert!(u.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn defective_ep_matches_series() {
        let g = 0.91 / 4.0;
        let h = ComplexMatrix::from_rows(&[[c(0.0, -0.455), c(g, 0.0)], [c(g, 0.0), c(0.0, 0.0)]]).unwrap();
        let u = matrix_exponential(&h, 1.0);
        let oracle = series_oracle(&h, 1.0, 20);
        assert!(u.max_abs_diff(&oracle) < 1e-10);
    }

    #[test]
    fn three_level_matches_series() {
        let h = ComplexMatrix::from_rows(&[
            [c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.1, -0.455), c(0.3, 0.0)],
            [c(0.0, 0.0), c(0.3, 0.0), c(0.0, -0.03)],
        ])
        .unwrap();
        let u = matrix_exponential(&h, 1.3);
        let oracle = series_oracle(&h, 1.3, 30);
        assert!(u.max_abs_diff(&oracle) < 1e-13);
    }

    #[test]
    fn closed_form_and_series_agree_for_2x2() {
        let h = ComplexMatrix::from_rows(&[[c(0.2, -0.455), c(0.8, 0.0)], [c(0.8, 0.0), c(0.0, 0.0)]]).unwrap();
        for t in [0.1, 1.0, 5.0, 9.0] {
            let closed = matrix_exponential(&h, t);
            let series = exp_taylor(&h.scale(c(0.0, -t)));
            let scale = series.frobenius_norm();
            assert!(closed.max_abs_diff(&series) < 1e-12 * scale, "t = {t}");
        }
    }

    proptest! {
        #[test]
        fn hermitian_generators_are_unitary(vals in prop::collection::vec(-2.0f64..2.0, 9), t in -5.0f64..5.0, three in any::<bool>()) {
            let dim = if three { 3 } else { 2 };
            let mut m = ComplexMatrix::zeros(dim);
            let mut k = 0;
            for i in 0..dim {
                m[(i, i)] = c(vals[k], 0.0);
                k += 1;
                for j in i + 1..dim {
                    m[(i, j)] = c(vals[k], vals[(k + 1) % 9]);
                    m[(j, i)] = m[(i, j)].conj();
                    k += 1;
                }
            }
            let u = matrix_exponential(&m, t);
            prop_assert!((u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(dim)) < 1e-10);
        }
    }
}
