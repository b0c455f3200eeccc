//! Simulation of a driven, dissipative qutrit under no-jump postselection:
//! master-equation and non-Hermitian dynamics, exceptional-point analysis,
//! simulated tomography with readout correction, and linearity tests.

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod linearity;
pub mod measurement;
pub mod qcore;
pub mod rng;
pub mod spectral;

pub use error::{Error, ErrorKind, Result};
