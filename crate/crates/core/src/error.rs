use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("eigensolver did not converge for a {dim}x{dim} matrix")]
    NonConvergence { dim: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e}, scale {scale:e})")]
    NotHermitian { asymmetry: f64, scale: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("trace too short for spectral analysis: {len} samples (need at least {min})")]
    TooShort { len: usize, min: usize },

    #[error("spectrum does not split into two bands of equal size: clusters {sizes:?}")]
    NotTwoBand { sizes: Vec<usize> },

    #[error("band gap {gap:e} collapsed below threshold {threshold:e}")]
    GapCollapse { gap: f64, threshold: f64 },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("invalid setting `{key}`: {reason}")]
    InvalidSetting { key: String, reason: String },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("frame overlap is singular (smallest singular value {min_singular:e}); step too large")]
    AlignmentSingular { min_singular: f64 },

    #[error("invalid drive pulse: {0}")]
    InvalidPulse(String),

    #[error("time step {dt:e} exceeds the limit {limit:e} (drive period / 16)")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("detuning {detuning:e} is non-zero; no closed form, use numeric evolution")]
    DetunedNotClosedForm { detuning: f64 },

    #[error("sweep window violates the asymptotic requirement: |alpha t| = {reach:e} < {required:e}")]
    AsymptoticViolation { reach: f64, required: f64 },

    #[error("no spectral peaks found: population trace is flat")]
    NoPeaks,

    #[error("no preparation plan reaches the required fidelity (best {best:.4})")]
    NoPlan { best: f64 },

    #[error("plan frequencies disagree with the model by {deviation:.3} (relative)")]
    PlanMismatch { deviation: f64 },

    #[error("Rabi frequencies {0:e} and {1:e} are not distinguishable")]
    DegenerateRabi(f64, f64),

    #[error("rotated single-drive tensors are inconsistent (non-Hermiticity {0:e})")]
    InconsistentBases(f64),

    #[error("Landau-Zener fit residual {residual:.3} exceeds {limit:.3}")]
    FitPoor { residual: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Coarse classification used to map failures onto process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Physics,
    Protocol,
    Internal,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            UnknownModel(_) | InvalidSetting { .. } | InvalidPulse(_) | InvalidArgument(_)
            | IndexOutOfRange { .. } | StepTooLarge { .. } | DimensionMismatch { .. } => {
                ErrorClass::Config
            }
            NotTwoBand { .. } | GapCollapse { .. } | AlignmentSingular { .. }
            | AsymptoticViolation { .. } | NotHermitian { .. } | TooShort { .. } => {
                ErrorClass::Physics
            }
            NoPeaks | NoPlan { .. } | PlanMismatch { .. } | DegenerateRabi(..)
            | InconsistentBases(_) | FitPoor { .. } | DetunedNotClosedForm { .. } => {
                ErrorClass::Protocol
            }
            NonConvergence { .. } => ErrorClass::Internal,
        }
    }
}
