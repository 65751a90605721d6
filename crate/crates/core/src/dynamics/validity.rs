//! Full-versus-RWA comparison along a path toward a gap closing.

use std::f64::consts::TAU;

use serde::Serialize;

use super::evolve::evolve_with;
use super::{probe_state, DrivePulse, EvolveMode, EvolveOptions};
use crate::error::Result;
use crate::geometry::LocalGeometry;
use crate::models::{Band, HamiltonianModel, ParameterPoint};
use crate::numerics::Spectrum;

/// Population discrepancy above which a point is flagged.
pub const DISCREPANCY_FLAG: f64 = 0.1;
/// A Rabi line must exceed this multiple of the spectral floor to count as visible.
pub const VISIBILITY_THRESHOLD: f64 = 3.0;
/// Projective measurements per time sample assumed for the spectral floor.
pub const DEFAULT_SHOTS: u64 = 10_000;
/// Number of predicted Rabi periods over which full and RWA populations are compared.
pub const DEFAULT_COMPARISON_PERIODS: f64 = 3.0;

#[derive(Debug, Clone, Copy)]
pub struct ValidityOptions {
    pub dt: Option<f64>,
    pub shots: u64,
    pub comparison_periods: f64,
}

impl Default for ValidityOptions {
    fn default() -> Self {
        Self { dt: None, shots: DEFAULT_SHOTS, comparison_periods: DEFAULT_COMPARISON_PERIODS }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityPoint {
    pub lambda: Vec<f64>,
    pub gap: f64,
    pub gap_over_omega: f64,
    /// Largest eigenvalue of the minus-band coupling operator.
    pub q_max: f64,
    /// Population frequency `2 A sqrt(q_max)` predicted by the resonant RWA.
    pub predicted_line: f64,
    /// `max |P+_full(t) - P+_rwa(t)|` over the comparison window.
    pub discrepancy: f64,
    pub comparison_time: f64,
    /// Largest full-mode `P+` excursion over the whole pulse.
    pub max_pop_plus: f64,
    /// Strongest full-mode line below `omega / 2`, if any.
    pub peak_frequency: Option<f64>,
    pub peak_amplitude: f64,
    /// Larger of the median bin amplitude and the projection-noise floor.
    pub spectral_floor: f64,
    pub visibility: f64,
    pub rabi_peak_visible: bool,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidityReport {
    pub omega: f64,
    pub amplitude: f64,
    pub duration: f64,
    pub shots: u64,
    pub points: Vec<ValidityPoint>,
}

impl ValidityReport {
    pub fn flagged(&self) -> Vec<usize> {
        self.points.iter().enumerate().filter(|(_, p)| p.flagged).map(|(i, _)| i).collect()
    }
}

/// Runs the same pulse (fixed `omega`, `A`, duration) at every point of `path`, starting from
/// the lower-band [`probe_state`], in full and rotating-frame modes.
///
/// Populations are compared over `comparison_periods` Rabi periods of the strongest pair; beyond
/// that the Bloch-Siegert shift dephases the two modes even when the RWA holds. The Rabi peak is
/// the strongest full-mode line below `omega / 2`. Its floor is the mean bin amplitude of the
/// binomial noise from `shots` measurements per sample at `P = 1/2`, or the median bin amplitude
/// if that is larger.
pub fn rwa_validity<M: HamiltonianModel + ?Sized>(
    model: &M,
    path: &[ParameterPoint],
    pulse: &DrivePulse,
    options: &ValidityOptions,
) -> Result<ValidityReport> {
    pulse.validate(f64::INFINITY, true)?;
    let sigma = 0.5 / (options.shots.max(1) as f64).sqrt();
    let mut points = Vec::with_capacity(path.len());
    for lambda in path {
        let geo = LocalGeometry::new(model, lambda)?;
        let psi0 = probe_state(&geo.bands, Band::Minus);
        let mut evolve = EvolveOptions::new(EvolveMode::Full).with_stride(1);
        evolve.dt = options.dt;
        let full = evolve_with(model, &geo, pulse, &psi0, &evolve)?;
        evolve.mode = EvolveMode::Rwa;
        let rwa = evolve_with(model, &geo, pulse, &psi0, &evolve)?;

        let op = geo.coupling_operator(Band::Minus, pulse.coupling())?;
        let q_max = geo.diagonalize(&op)?.eigenvalues[0].max(0.0);
        let predicted_line = 2.0 * pulse.amplitude * q_max.sqrt();
        let comparison_time = if predicted_line > 0.0 {
            (options.comparison_periods * TAU / predicted_line).min(pulse.duration)
        } else {
            pulse.duration
        };
        let discrepancy = if pulse.amplitude == 0.0 {
            0.0
        } else {
            full.times
                .iter()
                .zip(full.pop_plus.iter().zip(&rwa.pop_plus))
                .filter(|(t, _)| **t <= comparison_time * (1.0 + 1e-12))
                .fold(0.0_f64, |a, (_, (x, y))| a.max((x - y).abs()))
        };

        let spectrum = Spectrum::new(full.uniform_pop_plus(), full.sample_dt)?;
        let spectral_floor = spectrum.floor().max(spectrum.noise_floor(sigma)).max(f64::MIN_POSITIVE);
        let peak = spectrum.peaks().into_iter().find(|p| p.frequency < 0.5 * pulse.omega);
        let peak_amplitude = peak.map_or(0.0, |p| p.amplitude);
        let visibility = peak_amplitude / spectral_floor;
        points.push(ValidityPoint {
            lambda: lambda.values().to_vec(),
            gap: geo.bands.gap(),
            gap_over_omega: geo.bands.gap() / pulse.omega,
            q_max,
            predicted_line,
            discrepancy,
            comparison_time,
            max_pop_plus: full.pop_plus.iter().fold(0.0_f64, |a, &x| a.max(x)),
            peak_frequency: peak.map(|p| p.frequency),
            peak_amplitude,
            spectral_floor,
            visibility,
            rabi_peak_visible: visibility > VISIBILITY_THRESHOLD,
            flagged: discrepancy > DISCREPANCY_FLAG,
        });
    }
    Ok(ValidityReport {
        omega: pulse.omega,
        amplitude: pulse.amplitude,
        duration: pulse.duration,
        shots: options.shots,
        points,
    })
}
