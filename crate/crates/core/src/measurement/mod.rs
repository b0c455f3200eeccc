//! Simulated readout and tomography with readout-error correction.

mod counts_csv;
mod readout;
mod tomography;

pub use counts_csv::{read_counts_csv, write_counts_csv, COUNTS_HEADER};
pub use readout::{
    apply_confusion, ibu_correct, paper_beta, sample_counts, ConfusionMatrix, ProbabilityVector,
    DEFAULT_IBU_ITERATIONS, DEVICE_BETA_RAW, DEVICE_ROW_SUM_TOL, ROW_SUM_TOL, SIMPLEX_TOL,
};
pub use tomography::{
    reconstruct_bloch, reconstruct_density, reconstruct_diag3, renormalization_factor, renormalize_subensemble,
    rotated_populations, simulate_tomography, tomography_rotation, CountsRecord, RenormalizedPair, TomographyAxis,
    BLOCH_CONVENTION, MIN_SUBENSEMBLE,
};
