//! Measurement protocols: Rabi spectroscopy, eigenstate preparation by commensurate pulses and
//! energy measurement, Hadamard-assisted tomography of the mixing between drive bases, metric
//! and curvature extraction, and Landau-Zener extraction of coupling eigenvalues.

mod lz_fit;
mod preparation;
mod spectroscopy;
mod tomography;


use serde::{Deserialize, Serialize};

pub use lz_fit::{lz_extraction, LzFit, LzFitOptions, FIT_RESIDUAL_LIMIT};
pub use preparation::{
    hadamard_in_subspace, iterate_preparation, plan_preparation, prepare_eigenstate, IterationResult,
    MeasurementRecord, Partition, PlanRequest, PlanTree, PreparationLeaf, PreparationOutcome, PreparationPlan,
    PrepareOptions, MAX_ITERATED_DEGENERACY, PLAN_MISMATCH_TOL,
};
pub use spectroscopy::{
    rabi_spectroscopy, BasisTag, RabiSpectrum, RecordLength, SpectroscopyOptions, DEFAULT_MIN_PEAK_AMPLITUDE,
};
pub use tomography::{
    extract_metric_curvature, tomography_mixing, ExtractionOptions, ExtractionReport, MixingTransform,
    SettingRecord, TomographyOptions, TomographySetting, DEFAULT_SHOTS, INCONSISTENCY_TOL, RABI_DEGENERACY_TOL,
};

/// How a projective energy measurement is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasureMode {
    /// Exact outcome probabilities; every outcome is followed.
    Branch,
    /// Outcomes drawn from ChaCha8 seeded with `seed`.
    Sample { seed: u64 },
}
