//! Time evolution: the qutrit master equation, no-jump (non-Hermitian)
//! propagation on the (e, f) manifold, jump trajectories and postselection.

mod lindblad;
mod model;
mod nonhermitian;
mod trajectory;

pub use lindblad::{
    conditional_ef_state, evolve_lindblad, evolve_lindblad_series, lindblad_rhs, ConditionalState, DEFAULT_DT,
    MIN_SUCCESS,
};
pub use model::{
    build_effective_hamiltonian, build_three_level_model, pt_decompose, Dissipator, EffectiveHamiltonian,
    LindbladModel, PtDecomposition,
};
pub use nonhermitian::{
    integrate_nonlinear_schrodinger, propagate_nonhermitian, propagate_series, Propagated, MIN_SURVIVAL,
};
pub use trajectory::{
    sample_ensemble, sample_jump_trajectory, sample_jump_trajectory_at, EnsembleStats, JumpEvent,
    TrajectoryRecord, TrajectorySummary,
};

pub(crate) use lindblad::check_grid;
