use crate::error::{Error, Result};
use crate::qcore::{ComplexMatrix, SystemParams, C64};

/// No-jump generator on the (e, f) manifold:
/// [[Δ − iΓ_e/2, J], [J, 0]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian {
    matrix: ComplexMatrix,
    params: SystemParams,
}

impl EffectiveHamiltonian {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Γ = i(H − H†)/2, the loss operator that sets the norm decay rate.
    pub fn anti_hermitian_part(&self) -> ComplexMatrix {
        (self.matrix - self.matrix.adjoint()).scale(C64::new(0.0, 0.5))
    }
}

pub fn build_effective_hamiltonian(params: &SystemParams) -> EffectiveHamiltonian {
    let j = C64::new(params.coupling, 0.0);
    let matrix = ComplexMatrix::from_rows(&[
        [C64::new(params.delta, -params.gamma_e / 2.0), j],
        [j, C64::new(0.0, 0.0)],
    ])
    .expect("2x2 rows");
    EffectiveHamiltonian { matrix, params: *params }
}

/// H_eff = shift·𝟙 + H_PT with shift = −iΓ_e/4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PtDecomposition {
    pub shift: C64,
    pub h_pt: ComplexMatrix,
}

impl PtDecomposition {
    pub fn reassemble(&self) -> ComplexMatrix {
        ComplexMatrix::identity(2).scale(self.shift) + self.h_pt
    }
}

pub fn pt_decompose(h: &EffectiveHamiltonian) -> PtDecomposition {
    let shift = C64::new(0.0, -h.params.gamma_e / 4.0);
    let h_pt = h.matrix - ComplexMatrix::identity(2).scale(shift);
    PtDecomposition { shift, h_pt }
}

/// A jump operator with its rate folded in (L = √Γ |target⟩⟨source|).
#[derive(Debug, Clone, PartialEq)]
pub struct Dissipator {
    label: String,
    operator: ComplexMatrix,
    exits_manifold: bool,
}

impl Dissipator {
    pub fn new(label: impl Into<String>, operator: ComplexMatrix) -> Self {
        // A jump whose image lies entirely in |g⟩ (index 0) ends the
        // postselected record.
        let exits_manifold = operator.dim() == 3
            && operator.frobenius_norm() > 0.0
            && (1..3).all(|i| (0..3).all(|j| operator[(i, j)] == C64::new(0.0, 0.0)));
        Self { label: label.into(), operator, exits_manifold }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn operator(&self) -> &ComplexMatrix {
        &self.operator
    }

    /// True when a jump in this channel lands in |g⟩.
    pub fn exits_manifold(&self) -> bool {
        self.exits_manifold
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    hamiltonian: ComplexMatrix,
    dissipators: Vec<Dissipator>,
    /// Σ_j L_j†L_j
    decay: ComplexMatrix,
}

impl LindbladModel {
    pub fn new(hamiltonian: ComplexMatrix, dissipators: Vec<Dissipator>) -> Result<Self> {
        let dim = hamiltonian.dim();
        let mut decay = ComplexMatrix::zeros(dim);
        for d in &dissipators {
            if d.operator.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: d.operator.dim() });
            }
            decay += d.operator.adjoint() * d.operator;
        }
        Ok(Self { hamiltonian, dissipators, decay })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn dissipators(&self) -> &[Dissipator] {
        &self.dissipators
    }

    pub(crate) fn decay_operator(&self) -> &ComplexMatrix {
        &self.decay
    }

    /// H − (i/2) Σ L†L, the generator between jumps.
    pub fn no_jump_hamiltonian(&self) -> ComplexMatrix {
        self.hamiltonian - self.decay.scale(C64::new(0.0, 0.5))
    }
}

/// Driven, dissipative qutrit in the rotating frame:
/// H = Δ|e⟩⟨e| + J(|e⟩⟨f| + |f⟩⟨e|), L_e = √Γ_e|g⟩⟨e|, L_f = √Γ_f|e⟩⟨f|.
pub fn build_three_level_model(params: &SystemParams) -> LindbladModel {
    let mut h = ComplexMatrix::zeros(3);
    h[(1, 1)] = C64::new(params.delta, 0.0);
    h[(1, 2)] = C64::new(params.coupling, 0.0);
    h[(2, 1)] = C64::new(params.coupling, 0.0);

    let mut le = ComplexMatrix::zeros(3);
    le[(0, 1)] = C64::new(params.gamma_e.sqrt(), 0.0);
    let mut lf = ComplexMatrix::zeros(3);
    lf[(1, 2)] = C64::new(params.gamma_f.sqrt(), 0.0);

    LindbladModel::new(h, vec![Dissipator::new("L_e", le), Dissipator::new("L_f", lf)])
        .expect("consistent dimensions")
}
