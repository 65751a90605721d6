//! Driven dynamics: lab-frame and rotating-frame Hamiltonians, time propagation, the resonant
//! closed form, Landau-Zener sweeps and the RWA breakdown diagnostic.

mod closed_form;
mod evolve;
mod hamiltonians;
mod lz;
mod validity;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

pub use closed_form::{rwa_closed_form, PairAmplitudes};
pub use evolve::{evolve, EvolveMode, EvolveOptions, PopulationTrace, DEFAULT_DT_DIVISOR, DEFAULT_SAMPLE_STRIDE};
pub use hamiltonians::{lab_hamiltonian, rwa_hamiltonian, LabDrive, Modulation, RwaHamiltonian};
pub use lz::{lz_probability, lz_run, LzInitial, LzOutcome, LzSweep, DEFAULT_WINDOW_FACTOR, MIN_WINDOW_FACTOR};
pub use validity::{rwa_validity, ValidityOptions, ValidityPoint, ValidityReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Coupling;
use crate::models::{Band, BandDecomposition};
use crate::numerics::linalg::{c, CVector};

const PROBE_SEED: u64 = 0x5eed_0001;

/// Largest `A / omega` accepted without `force`.
pub const DEFAULT_RATIO_MAX: f64 = 0.05;

/// Rectangular drive `lambda_j -> lambda_j + (2A/omega) cos(omega t)`, optionally with a second
/// tone `lambda_k -> lambda_k + (2A/omega) cos(omega t + phase)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivePulse {
    pub j: usize,
    pub k: Option<usize>,
    pub amplitude: f64,
    pub omega: f64,
    pub phase: f64,
    pub duration: f64,
}

impl DrivePulse {
    pub fn single(j: usize, amplitude: f64, omega: f64, duration: f64) -> Self {
        Self { j, k: None, amplitude, omega, phase: 0.0, duration }
    }

    pub fn two_tone(j: usize, k: usize, phase: f64, amplitude: f64, omega: f64, duration: f64) -> Self {
        Self { j, k: Some(k), amplitude, omega, phase, duration }
    }

    /// Same drive tuned to the band splitting of `bands`.
    pub fn resonant_with(mut self, bands: &BandDecomposition) -> Self {
        self.omega = bands.gap();
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.duration = duration;
        self
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }

    pub fn coupling(&self) -> Coupling {
        match self.k {
            None => Coupling::Single { j: self.j },
            Some(k) => Coupling::TwoTone { j: self.j, k, phase: self.phase },
        }
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    /// `(E+ - E-) - omega`.
    pub fn detuning(&self, bands: &BandDecomposition) -> f64 {
        bands.gap() - self.omega
    }

    /// Checks finiteness, `omega > 0`, `T > 0`, `A >= 0`, distinct tones, and `A/omega <= ratio_max`
    /// unless `force`.
    pub fn validate(&self, ratio_max: f64, force: bool) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPulse(msg));
        if ![self.amplitude, self.omega, self.phase, self.duration].iter().all(|x| x.is_finite()) {
            return bad("pulse parameters must be finite".into());
        }
        if self.omega <= 0.0 {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if self.duration <= 0.0 {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if self.amplitude < 0.0 {
            return bad(format!("amplitude must be non-negative, got {}", self.amplitude));
        }
        if self.k == Some(self.j) {
            return bad(format!("two-tone drive uses index {} twice", self.j));
        }
        let ratio = self.amplitude / self.omega;
        if ratio > ratio_max && !force {
            return bad(format!("A/omega = {ratio:.4} exceeds ratio_max = {ratio_max} (use --force to override)"));
        }
        Ok(())
    }
}


/// Normalized projection onto `band` of a fixed pseudo-random vector. It depends only on the
/// band projector, so it is the same state in every gauge, and it generically overlaps every
/// coupling eigenpair.
pub fn probe_state(bands: &BandDecomposition, band: Band) -> CVector {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let v = CVector::from_fn(bands.dim(), |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (bands.projector(band) * v).normalize()
}
