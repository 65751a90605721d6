//! Numerical kernel: Hermitian eigendecomposition, unitary stepping and spectral peaks.

pub mod complex_serde;
pub mod linalg;
pub mod propagate;
pub mod spectrum;

pub use linalg::{hermitian_eig, hermitian_eig_aligned, CMatrix, CVector, EigenSystem, HermitianMatrix};
pub use propagate::{propagate_step, Propagator};
pub use spectrum::{dominant_frequencies, SpectralPeak, Spectrum};
