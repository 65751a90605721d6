use std::f64::consts::TAU;

use serde::Serialize;

use crate::dynamics::{evolve, probe_state, DrivePulse, EvolveMode, EvolveOptions, PopulationTrace};
use crate::error::{Error, Result};
use crate::geometry::{Coupling, LocalGeometry};
use crate::models::{Band, HamiltonianModel, ParameterPoint};
use crate::numerics::linalg::CVector;
use crate::numerics::{SpectralPeak, Spectrum};

/// A pair holding population weight `w` contributes a line of amplitude `w / 2`; this keeps every
/// pair with weight at least `1e-3`.
pub const DEFAULT_MIN_PEAK_AMPLITUDE: f64 = 5e-4;

/// Couplings whose eigenvalue is below this fraction of the largest are treated as dark when the
/// record length is expressed in Rabi periods.
const DARK_FRACTION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordLength {
    /// Keep the pulse duration.
    Pulse,
    Duration(f64),
    /// Multiples of the slowest predicted Rabi period `2 pi / Omega`.
    RabiPeriods(f64),
}

#[derive(Debug, Clone)]
pub struct SpectroscopyOptions {
    pub mode: EvolveMode,
    /// Band the initial state lives in.
    pub band: Band,
    /// Lab-frame initial state; defaults to the band [`probe_state`].
    pub psi0: Option<CVector>,
    pub record: RecordLength,
    /// Keep `pulse.omega` instead of tuning it to the gap.
    pub keep_detuning: bool,
    pub dt: Option<f64>,
    pub sample_stride: usize,
    pub min_peak_amplitude: f64,
}

impl SpectroscopyOptions {
    pub fn new(mode: EvolveMode) -> Self {
        Self {
            mode,
            band: Band::Minus,
            psi0: None,
            record: RecordLength::Pulse,
            keep_detuning: false,
            dt: None,
            sample_stride: crate::dynamics::DEFAULT_SAMPLE_STRIDE,
            min_peak_amplitude: DEFAULT_MIN_PEAK_AMPLITUDE,
        }
    }

    pub fn with_band(mut self, band: Band) -> Self {
        self.band = band;
        self
    }

    pub fn with_state(mut self, psi0: CVector) -> Self {
        self.psi0 = Some(psi0);
        self
    }

    pub fn with_record(mut self, record: RecordLength) -> Self {
        self.record = record;
        self
    }
}

/// Which coupling operator the inferred eigenvalues belong to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisTag {
    pub band: Band,
    pub coupling: Coupling,
}

#[derive(Debug, Clone, Serialize)]
pub struct RabiSpectrum {
    /// Accepted population lines, strongest first.
    pub peaks: Vec<SpectralPeak>,
    /// Amplitude Rabi frequencies (half the population frequencies), descending.
    pub rabi_frequencies: Vec<f64>,
    /// `(Omega / A)^2`, descending.
    pub inferred_q: Vec<f64>,
    pub drive: DrivePulse,
    pub basis_tag: BasisTag,
    /// Eigenvalues of the same coupling operator from the geometry, descending.
    pub reference_q: Vec<f64>,
    #[serde(skip)]
    pub trace: PopulationTrace,
}

impl RabiSpectrum {
    /// Largest relative deviation of each inferred eigenvalue from the nearest reference one.
    pub fn max_relative_error(&self) -> f64 {
        self.inferred_q
            .iter()
            .map(|&q| {
                self.reference_q
                    .iter()
                    .map(|&r| (q - r).abs() / r.abs().max(f64::MIN_POSITIVE))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

/// Drives the band transition, records the population of the other band and reads the coupling
/// eigenvalues off the spectral lines: a pair with eigenvalue `q` oscillates at `2 A sqrt(q)`.
pub fn rabi_spectroscopy<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    pulse: &DrivePulse,
    options: &SpectroscopyOptions,
) -> Result<RabiSpectrum> {
    let geo = LocalGeometry::new(model, lambda)?;
    let mut drive = if options.keep_detuning { *pulse } else { pulse.resonant_with(&geo.bands) };
    let op = geo.coupling_operator(options.band, drive.coupling())?;
    let reference_q: Vec<f64> = geo.diagonalize(&op)?.eigenvalues.iter().map(|&q| q.max(0.0)).collect();
    match options.record {
        RecordLength::Pulse => {}
        RecordLength::Duration(t) => drive.duration = t,
        RecordLength::RabiPeriods(k) => {
            let q_max = reference_q.first().copied().unwrap_or(0.0);
            let q_min = reference_q.iter().copied().filter(|&q| q > DARK_FRACTION * q_max).fold(f64::INFINITY, f64::min);
            if q_min.is_finite() && drive.amplitude > 0.0 {
                drive.duration = k * TAU / (drive.amplitude * q_min.sqrt());
            }
        }
    }
    drive.validate(f64::INFINITY, true)?;
    let psi0 = match &options.psi0 {
        Some(v) => v.clone(),
        None => probe_state(&geo.bands, options.band),
    };
    let mut evolve_options = EvolveOptions::new(options.mode).with_stride(options.sample_stride);
    evolve_options.dt = options.dt;
    let trace = evolve(model, lambda, &drive, &psi0, &evolve_options)?;

    let n = geo.degeneracy();
    let signal: Vec<f64> = match options.band {
        Band::Minus => trace.uniform_pop_plus().to_vec(),
        Band::Plus => trace.pop_minus[..trace.uniform_pop_plus().len()].to_vec(),
    };
    let spectrum = Spectrum::new(&signal, trace.sample_dt)?;
    let mut peaks: Vec<SpectralPeak> = Vec::new();
    for p in spectrum.peaks() {
        if peaks.len() == n {
            break;
        }
        if p.frequency >= 0.5 * drive.omega || p.amplitude < options.min_peak_amplitude {
            continue;
        }
        // Skip shoulders of an accepted line (the window main lobe spans four bins).
        if peaks.iter().any(|a| (a.frequency - p.frequency).abs() < 2.0 * spectrum.resolution) {
            continue;
        }
        peaks.push(p);
    }
    if peaks.is_empty() || drive.amplitude == 0.0 {
        return Err(Error::NoPeaks);
    }
    let mut rabi_frequencies: Vec<f64> = peaks.iter().map(|p| 0.5 * p.frequency).collect();
    rabi_frequencies.sort_by(|a, b| b.total_cmp(a));
    let inferred_q = rabi_frequencies.iter().map(|w| (w / drive.amplitude).powi(2)).collect();
    Ok(RabiSpectrum {
        peaks,
        rabi_frequencies,
        inferred_q,
        basis_tag: BasisTag { band: options.band, coupling: drive.coupling() },
        drive,
        reference_q,
        trace,
    })
}
