use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::preparation::{hadamard_in_subspace, plan_preparation, Partition, PlanRequest, PreparationPlan};
use super::spectroscopy::{rabi_spectroscopy, RabiSpectrum, RecordLength, SpectroscopyOptions};
use super::MeasureMode;
use crate::dynamics::{evolve, DrivePulse, EvolveMode, EvolveOptions};
use crate::error::{Error, Result};
use crate::geometry::{curvature, metric, Coupling, LocalGeometry};
use crate::models::{Band, HamiltonianModel, ParameterPoint};
use crate::numerics::complex_serde;
use crate::numerics::linalg::{c, hermitian_defect, max_abs, max_diff, r, CMatrix, CVector, HermitianMatrix};
use crate::numerics::hermitian_eig;

pub const DEFAULT_SHOTS: u64 = 10_000;
/// Relative separation below which two two-tone Rabi frequencies cannot be told apart.
pub const RABI_DEGENERACY_TOL: f64 = 1e-3;
/// Non-Hermiticity of a rotated single-drive tensor that signals inconsistent bases.
pub const INCONSISTENCY_TOL: f64 = 1e-3;
/// Default search horizon for the tomography pulse, in units of `pi / Omega_min`.
const DEFAULT_HORIZON: f64 = 50.0;

#[derive(Debug, Clone)]
pub struct TomographyOptions {
    pub mode: EvolveMode,
    pub measure: MeasureMode,
    pub shots: u64,
    /// Two-tone Rabi frequencies (descending) to plan with; taken from the model when absent.
    pub omegas: Option<Vec<f64>>,
    /// Longest tomography pulse; `50 pi / Omega_min` when absent.
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
}

impl TomographyOptions {
    pub fn new(mode: EvolveMode, measure: MeasureMode) -> Self {
        Self { mode, measure, shots: DEFAULT_SHOTS, omegas: None, t_max: None, dt: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TomographySetting {
    /// Two-tone pulse on the prepared state.
    Population,
    /// Hadamard in the two-tone basis first.
    Hadamard,
    /// Phase gate `diag(1, i)`, then Hadamard.
    PhaseHadamard,
}

#[derive(Debug, Clone, Serialize)]
pub struct SettingRecord {
    pub nu: usize,
    pub setting: TomographySetting,
    /// Probability (or shot fraction) of finding the starting band after the pulse.
    pub p_stay: f64,
    /// Weight on the first two-tone pair inferred from `p_stay`.
    pub first_pair_weight: f64,
}

/// Expansion coefficients `a_{nu mu} = <psi-bar_mu|psi~_nu>` of the single-drive eigenstates in
/// the two-tone eigenbasis of one band (the complex conjugate of `U~ U-bar^dagger`).
#[derive(Debug, Clone, Serialize)]
pub struct MixingTransform {
    pub band: Band,
    pub single: Coupling,
    pub two_tone: Coupling,
    #[serde(serialize_with = "complex_serde::matrix")]
    pub entries: CMatrix,
    /// Row gauge of `entries`.
    pub phase_gauge: &'static str,
    pub plan: Option<PreparationPlan>,
    pub settings: Vec<SettingRecord>,
    /// Same coefficients from the geometry, in the same gauge.
    #[serde(serialize_with = "complex_serde::matrix")]
    pub reference: CMatrix,
    /// `max |a a^dagger - 1|`.
    pub unitarity_defect: f64,
}

impl MixingTransform {
    pub fn magnitude_error(&self) -> f64 {
        self.entries.iter().zip(self.reference.iter()).map(|(a, b)| (a.norm() - b.norm()).abs()).fold(0.0, f64::max)
    }

    pub fn row_norm_defect(&self) -> f64 {
        (0..self.entries.nrows())
            .map(|i| (self.entries.row(i).norm_squared() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

const PHASE_GAUGE: &str = "first column real and non-negative";

fn gauge_rows(mut m: CMatrix) -> CMatrix {
    for i in 0..m.nrows() {
        let z = m[(i, 0)];
        if z.norm() > 0.0 {
            let p = z.conj() / r(z.norm());
            for j in 0..m.ncols() {
                m[(i, j)] *= p;
            }
        }
    }
    m
}

/// Reconstructs the single-drive eigenstates of `band` in the two-tone eigenbasis (`N <= 2`).
///
/// Each single-drive eigenstate is injected exactly, the two-tone pulse of a planned duration is
/// applied and the band energy measured. With the rotation angles `Omega-bar_mu T` known, the
/// stay probability `sum_mu |b_mu|^2 cos^2(Omega-bar_mu T)` is inverted for the weight of the
/// first two-tone pair. Repeating after a Hadamard, and after `diag(1, i)` plus Hadamard, gives
/// the cosine and sine of the relative phase.
pub fn tomography_mixing<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    band: Band,
    single: &DrivePulse,
    two_tone: &DrivePulse,
    options: &TomographyOptions,
) -> Result<MixingTransform> {
    let geo = LocalGeometry::new(model, lambda)?;
    tomography_with(model, &geo, band, single, two_tone, options, 0)
}

fn tomography_with<M: HamiltonianModel + ?Sized>(
    model: &M,
    geo: &LocalGeometry,
    band: Band,
    single: &DrivePulse,
    two_tone: &DrivePulse,
    options: &TomographyOptions,
    stream: u64,
) -> Result<MixingTransform> {
    let n = geo.degeneracy();
    if n > 2 {
        return Err(Error::InvalidArgument(format!("tomography is defined for N <= 2, got {n}")));
    }
    if two_tone.k.is_none() {
        return Err(Error::InvalidArgument("the mixing pulse must be two-tone".into()));
    }
    let single = single.resonant_with(&geo.bands);
    let two_tone = two_tone.resonant_with(&geo.bands);
    let tilde = geo.paired_basis(single.coupling())?;
    let bar = geo.paired_basis(two_tone.coupling())?;
    let reference = gauge_rows((bar.frame(band).adjoint() * tilde.frame(band)).transpose());
    if n == 1 {
        return Ok(MixingTransform {
            band,
            single: single.coupling(),
            two_tone: two_tone.coupling(),
            entries: CMatrix::identity(1, 1),
            phase_gauge: PHASE_GAUGE,
            plan: None,
            settings: Vec::new(),
            unitarity_defect: 0.0,
            reference,
        });
    }

    let omegas = match &options.omegas {
        Some(w) if w.len() == 2 => w.clone(),
        Some(w) => return Err(Error::DimensionMismatch { expected: 2, got: w.len() }),
        None => bar.q.iter().map(|q| two_tone.amplitude * q.sqrt()).collect(),
    };
    if omegas.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::NoPeaks);
    }
    let t_max = options.t_max.unwrap_or(DEFAULT_HORIZON * PI / omegas[0].min(omegas[1]));
    let request = PlanRequest { tol: RABI_DEGENERACY_TOL, ..PlanRequest::new(t_max) };
    let conditioning = |p: &PreparationPlan| {
        let d = (omegas[0] * p.duration).cos().powi(2) - (omegas[1] * p.duration).cos().powi(2);
        d.abs()
    };
    let mut plan: Option<PreparationPlan> = None;
    for partition in [Partition::new(vec![0], vec![1]), Partition::new(vec![1], vec![0])] {
        match plan_preparation(&omegas, &partition, &request) {
            Ok(p) => {
                if plan.as_ref().is_none_or(|b| conditioning(&p) > conditioning(b) + 1e-12) {
                    plan = Some(p);
                }
            }
            Err(Error::NoPlan { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let plan = plan.ok_or(Error::NoPlan { best: 0.0 })?;
    let t = plan.duration;
    let (c0, c1) = ((omegas[0] * t).cos().powi(2), (omegas[1] * t).cos().powi(2));

    let frame = bar.frame(band);
    let hadamard = hadamard_in_subspace(frame, (0, 1))?;
    let f1 = frame.column(1);
    let phase_gate = CMatrix::identity(frame.nrows(), frame.nrows()) + f1 * f1.adjoint() * c(-1.0, 1.0);
    let pulse = two_tone.with_duration(t);
    let mut evolve_options = EvolveOptions::new(options.mode).with_stride(usize::MAX);
    evolve_options.dt = options.dt;
    let projector = geo.bands.projector(band);
    let mut rng = match options.measure {
        MeasureMode::Sample { seed } => Some(ChaCha8Rng::seed_from_u64(seed.wrapping_add(stream))),
        MeasureMode::Branch => None,
    };
    let mut measure = |psi: CVector| -> Result<f64> {
        let fin = evolve(model, &geo.lambda, &pulse, &psi, &evolve_options)?.final_state;
        let p = (&projector * &fin).norm_squared().clamp(0.0, 1.0);
        Ok(match rng.as_mut() {
            None => p,
            Some(rng) => (0..options.shots).filter(|_| rng.random::<f64>() < p).count() as f64 / options.shots as f64,
        })
    };

    let mut entries = CMatrix::zeros(2, 2);
    let mut settings = Vec::new();
    for nu in 0..2 {
        let state = tilde.state(band, nu);
        let mut weight = |setting: TomographySetting, psi: CVector| -> Result<f64> {
            let p_stay = measure(psi)?;
            let first_pair_weight = ((p_stay - c1) / (c0 - c1)).clamp(0.0, 1.0);
            settings.push(SettingRecord { nu, setting, p_stay, first_pair_weight });
            Ok(first_pair_weight)
        };
        let x = weight(TomographySetting::Population, state.clone())?;
        let xh = weight(TomographySetting::Hadamard, &hadamard * &state)?;
        let xs = weight(TomographySetting::PhaseHadamard, &hadamard * (&phase_gate * &state))?;
        let (m0, m1) = (x.sqrt(), (1.0 - x).sqrt());
        // |(a0 + a1)/sqrt2|^2 = 1/2 + |a0||a1| cos(d), |(a0 + i a1)/sqrt2|^2 = 1/2 + |a0||a1| sin(d).
        let d = if m0 * m1 > 1e-9 { (xs - 0.5).atan2(xh - 0.5) } else { 0.0 };
        entries[(nu, 0)] = r(m0);
        entries[(nu, 1)] = c((-d).cos(), (-d).sin()) * r(m1);
    }
    let unitarity_defect = max_diff(&(&entries * entries.adjoint()), &CMatrix::identity(2, 2));
    Ok(MixingTransform {
        band,
        single: single.coupling(),
        two_tone: two_tone.coupling(),
        entries,
        phase_gauge: PHASE_GAUGE,
        plan: Some(plan),
        settings,
        reference,
        unitarity_defect,
    })
}

#[derive(Debug, Clone)]
pub struct ExtractionOptions {
    pub band: Band,
    pub spectroscopy_mode: EvolveMode,
    /// Spectroscopy record length in slowest Rabi periods.
    pub rabi_periods: f64,
    pub tomography: TomographyOptions,
}

impl ExtractionOptions {
    pub fn new(mode: EvolveMode, measure: MeasureMode) -> Self {
        Self {
            band: Band::Minus,
            spectroscopy_mode: mode,
            rabi_periods: 40.0,
            tomography: TomographyOptions::new(mode, measure),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractionReport {
    pub band: Band,
    pub j: usize,
    pub k: usize,
    pub amplitude: f64,
    pub spectra: Vec<RabiSpectrum>,
    pub mixings: Vec<MixingTransform>,
    /// `g_jk` in the `phase = 0` two-tone basis.
    #[serde(serialize_with = "complex_serde::matrix")]
    pub metric: CMatrix,
    /// `F_jk` in the `phase = pi/2` two-tone basis.
    #[serde(serialize_with = "complex_serde::matrix")]
    pub curvature: CMatrix,
    /// Ground truth in the same bases.
    #[serde(serialize_with = "complex_serde::matrix")]
    pub reference_metric: CMatrix,
    #[serde(serialize_with = "complex_serde::matrix")]
    pub reference_curvature: CMatrix,
    pub metric_eigenvalues: Vec<f64>,
    pub curvature_eigenvalues: Vec<f64>,
    pub reference_metric_eigenvalues: Vec<f64>,
    pub reference_curvature_eigenvalues: Vec<f64>,
    /// `max |estimate - truth| / max |truth|`.
    pub metric_error: f64,
    pub curvature_error: f64,
    /// Largest non-Hermiticity among the rotated single-drive tensors.
    pub rotation_defect: f64,
}

/// `Q-bar = A^T diag(q) (A^T)^-1` with `A` the measured expansion coefficients: the single-drive
/// tensor written in the two-tone basis.
fn rotate(mixing: &MixingTransform, q: &[f64]) -> Result<(CMatrix, f64)> {
    let n = q.len();
    let at = mixing.entries.transpose();
    let inv = at.clone().try_inverse().ok_or(Error::InconsistentBases(f64::INFINITY))?;
    let d = CMatrix::from_diagonal(&CVector::from_iterator(n, q.iter().map(|&x| r(x))));
    let rotated = &at * d * inv;
    let scale = max_abs(&rotated).max(f64::MIN_POSITIVE);
    Ok((rotated.clone(), hermitian_defect(&rotated) / scale))
}

fn eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let mut v = hermitian_eig(&HermitianMatrix::symmetrized(m.clone()))?.values;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Spectroscopy of the four drives (`j`, `k`, two-tone at phases `pi/2` and `0`), tomography of
/// the single-drive eigenbases against both two-tone bases, and the difference
/// `diag(q-bar) - Q-bar_jj - Q-bar_kk`, which is `sigma F_jk` at phase `pi/2` and `2 g_jk` at 0.
pub fn extract_metric_curvature<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    j: usize,
    k: usize,
    amplitude: f64,
    options: &ExtractionOptions,
) -> Result<ExtractionReport> {
    let geo = LocalGeometry::new(model, lambda)?;
    let n = geo.degeneracy();
    if n > 2 {
        return Err(Error::InvalidArgument(format!("extraction is defined for N <= 2, got {n}")));
    }
    let band = options.band;
    let omega = geo.bands.gap();
    let base_duration = 100.0 * std::f64::consts::TAU / omega;
    let pulses = [
        DrivePulse::single(j, amplitude, omega, base_duration),
        DrivePulse::single(k, amplitude, omega, base_duration),
        DrivePulse::two_tone(j, k, FRAC_PI_2, amplitude, omega, base_duration),
        DrivePulse::two_tone(j, k, 0.0, amplitude, omega, base_duration),
    ];
    let spec_options = SpectroscopyOptions::new(options.spectroscopy_mode)
        .with_band(band)
        .with_record(RecordLength::RabiPeriods(options.rabi_periods));
    let mut spectra = Vec::with_capacity(4);
    for p in &pulses {
        let s = rabi_spectroscopy(model, lambda, p, &spec_options)?;
        if s.inferred_q.len() < n {
            let w = s.rabi_frequencies[0];
            return Err(Error::DegenerateRabi(w, w));
        }
        spectra.push(s);
    }

    let mut mixings = Vec::with_capacity(4);
    let mut rotation_defect = 0.0_f64;
    let mut rotated = Vec::with_capacity(4);
    for (stream, (single, tone)) in [(0, 2), (1, 2), (0, 3), (1, 3)].into_iter().enumerate() {
        let mut tomo = options.tomography.clone();
        if tomo.omegas.is_none() && n == 2 {
            tomo.omegas = Some(spectra[tone].rabi_frequencies.clone());
        }
        let mix = tomography_with(model, &geo, band, &pulses[single], &pulses[tone], &tomo, stream as u64)?;
        let (m, defect) = rotate(&mix, &spectra[single].inferred_q)?;
        rotation_defect = rotation_defect.max(defect);
        rotated.push(m);
        mixings.push(mix);
    }
    if rotation_defect > INCONSISTENCY_TOL {
        return Err(Error::InconsistentBases(rotation_defect));
    }
    let sym = |m: &CMatrix| HermitianMatrix::symmetrized(m.clone()).into_matrix();
    let diag = |q: &[f64]| CMatrix::from_diagonal(&CVector::from_iterator(n, q.iter().map(|&x| r(x))));
    let sigma = band.sign();
    let curvature_est = (diag(&spectra[2].inferred_q) - sym(&rotated[0]) - sym(&rotated[1])) * r(sigma);
    let metric_est = (diag(&spectra[3].inferred_q) - sym(&rotated[2]) - sym(&rotated[3])) * r(0.5);

    let q = geo.qgt(band, j, k)?;
    let in_basis = |m: &CMatrix, coupling: Coupling| -> Result<CMatrix> {
        let pb = geo.paired_basis(coupling)?;
        let coords = match band {
            Band::Minus => &pb.minus_coords,
            Band::Plus => &pb.plus_coords,
        };
        Ok(coords.adjoint() * m * coords)
    };
    let reference_curvature = in_basis(curvature(&q).matrix(), pulses[2].coupling())?;
    let reference_metric = in_basis(metric(&q).matrix(), pulses[3].coupling())?;
    let relative = |a: &CMatrix, b: &CMatrix| max_diff(a, b) / max_abs(b).max(f64::MIN_POSITIVE);
    Ok(ExtractionReport {
        band,
        j,
        k,
        amplitude,
        metric_error: relative(&metric_est, &reference_metric),
        curvature_error: relative(&curvature_est, &reference_curvature),
        metric_eigenvalues: eigenvalues(&metric_est)?,
        curvature_eigenvalues: eigenvalues(&curvature_est)?,
        reference_metric_eigenvalues: eigenvalues(&reference_metric)?,
        reference_curvature_eigenvalues: eigenvalues(&reference_curvature)?,
        metric: metric_est,
        curvature: curvature_est,
        reference_metric,
        reference_curvature,
        spectra,
        mixings,
        rotation_defect,
    })
}
