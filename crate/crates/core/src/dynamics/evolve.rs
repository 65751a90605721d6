use serde::{Deserialize, Serialize};

use super::hamiltonians::{LabDrive, Modulation, RwaHamiltonian};
use super::DrivePulse;
use crate::error::{Error, Result};
use crate::geometry::LocalGeometry;
use crate::models::{HamiltonianModel, ParameterPoint};
use crate::numerics::linalg::{CMatrix, CVector};
use crate::numerics::propagate::step_unitary;

pub const DEFAULT_DT_DIVISOR: f64 = 64.0;
pub const DEFAULT_SAMPLE_STRIDE: usize = 4;
/// `dt` may not exceed one sixteenth of the drive period.
const MIN_DT_DIVISOR: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMode {
    Full,
    FullExactModulation,
    Rwa,
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub mode: EvolveMode,
    /// Time step; defaults to `period / 64`.
    pub dt: Option<f64>,
    pub sample_stride: usize,
    /// `D x K` lab-frame states whose populations are recorded.
    pub reference: Option<CMatrix>,
}

impl EvolveOptions {
    pub fn new(mode: EvolveMode) -> Self {
        Self { mode, dt: None, sample_stride: DEFAULT_SAMPLE_STRIDE, reference: None }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.sample_stride = stride;
        self
    }

    pub fn with_reference(mut self, reference: CMatrix) -> Self {
        self.reference = Some(reference);
        self
    }
}

/// Sampled populations of a driven evolution.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PopulationTrace {
    pub times: Vec<f64>,
    pub pop_minus: Vec<f64>,
    pub pop_plus: Vec<f64>,
    /// `state_pop[s][r]`: population of reference state `r` at sample `s`.
    pub state_pop: Vec<Vec<f64>>,
    pub norm: Vec<f64>,
    /// Lab-frame state at the last sample.
    #[serde(skip)]
    pub final_state: CVector,
    /// Spacing of the regular samples (the last sample may be closer).
    pub sample_dt: f64,
}

impl PopulationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `max |P- + P+ - 1|`.
    pub fn band_sum_defect(&self) -> f64 {
        self.pop_minus.iter().zip(&self.pop_plus).fold(0.0_f64, |a, (m, p)| a.max((m + p - 1.0).abs()))
    }

    /// `max | ||psi|| - 1 |`.
    pub fn norm_drift(&self) -> f64 {
        self.norm.iter().fold(0.0_f64, |a, n| a.max((n - 1.0).abs()))
    }

    /// Population of reference state `r` over time.
    pub fn state_series(&self, r: usize) -> Vec<f64> {
        self.state_pop.iter().map(|row| row[r]).collect()
    }

    /// Regularly spaced part of `pop_plus` (drops a trailing short-interval sample).
    pub fn uniform_pop_plus(&self) -> &[f64] {
        let n = self.times.len();
        if n >= 2 && (self.times[n - 1] - self.times[n - 2] - self.sample_dt).abs() > 1e-9 * self.sample_dt {
            &self.pop_plus[..n - 1]
        } else {
            &self.pop_plus
        }
    }

    pub(crate) fn push_sample(&mut self, t: f64, minus: f64, plus: f64, states: Vec<f64>, norm: f64) {
        self.times.push(t);
        self.pop_minus.push(minus);
        self.pop_plus.push(plus);
        self.state_pop.push(states);
        self.norm.push(norm);
    }
}

/// Integrates the driven dynamics from `psi0` (lab-frame vector at `t = 0`) over `pulse.duration`.
///
/// Each step applies `exp(-i H(t + dt/2) dt)`. In `Full` modes band populations are projections
/// onto the static band frames at `lambda`; in `Rwa` mode the rotating-frame Hamiltonian is
/// integrated and the lab-frame state reconstructed for reference populations.
pub fn evolve<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    pulse: &DrivePulse,
    psi0: &CVector,
    options: &EvolveOptions,
) -> Result<PopulationTrace> {
    let geo = LocalGeometry::new(model, lambda)?;
    evolve_with(model, &geo, pulse, psi0, options)
}

pub(crate) fn evolve_with<M: HamiltonianModel + ?Sized>(
    model: &M,
    geo: &LocalGeometry,
    pulse: &DrivePulse,
    psi0: &CVector,
    options: &EvolveOptions,
) -> Result<PopulationTrace> {
    pulse.validate(f64::INFINITY, true)?;
    let dim = geo.bands.dim();
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: psi0.len() });
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("initial state norm {} is not 1", psi0.norm())));
    }
    let period = pulse.period();
    let dt = options.dt.unwrap_or(period / DEFAULT_DT_DIVISOR);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    if dt > period / MIN_DT_DIVISOR * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { dt, limit: period / MIN_DT_DIVISOR });
    }
    if let Some(r) = &options.reference {
        if r.nrows() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: r.nrows() });
        }
    }
    let stride = options.sample_stride.max(1);
    let full_steps = (pulse.duration / dt * (1.0 + 1e-12)).floor() as usize;
    let tail = pulse.duration - full_steps as f64 * dt;
    let tail = if tail > 1e-12 * pulse.duration { Some(tail) } else { None };
    let reference = options.reference.clone().unwrap_or_else(|| CMatrix::zeros(dim, 0));

    let mut trace = PopulationTrace { sample_dt: dt * stride as f64, ..Default::default() };
    match options.mode {
        EvolveMode::Rwa => {
            let rwa = RwaHamiltonian::from_geometry(geo, pulse)?;
            let n = rwa.degeneracy();
            let ref_minus = reference.adjoint() * &geo.bands.frame_minus;
            let ref_plus = reference.adjoint() * &geo.bands.frame_plus;
            let record = |trace: &mut PopulationTrace, b: &CVector, t: f64| {
                let (pm, pp) = rwa.band_populations(b);
                let (em, ep) = (phase(0.5 * rwa.omega * t), phase(-0.5 * rwa.omega * t));
                let amp = &ref_minus * b.rows(0, n) * em + &ref_plus * b.rows(n, n) * ep;
                trace.push_sample(t, pm, pp, amp.iter().map(|z| z.norm_sqr()).collect(), b.norm());
            };
            let step = step_unitary(&rwa.matrix, dt)?;
            let mut b = rwa.from_lab(psi0, 0.0);
            record(&mut trace, &b, 0.0);
            for i in 1..=full_steps {
                b = &step * &b;
                if i % stride == 0 {
                    record(&mut trace, &b, i as f64 * dt);
                }
            }
            if let Some(h) = tail {
                b = step_unitary(&rwa.matrix, h)? * &b;
            }
            if full_steps % stride != 0 || tail.is_some() {
                record(&mut trace, &b, pulse.duration);
            }
            trace.final_state = rwa.to_lab(&b, pulse.duration);
        }
        EvolveMode::Full | EvolveMode::FullExactModulation => {
            let modulation =
                if options.mode == EvolveMode::Full { Modulation::Linear } else { Modulation::Exact };
            let lab = LabDrive::new(model, &geo.lambda, pulse)?;
            let (fm, fp) = (geo.bands.frame_minus.adjoint(), geo.bands.frame_plus.adjoint());
            let ref_adj = reference.adjoint();
            let record = |trace: &mut PopulationTrace, psi: &CVector, t: f64| {
                let states = (&ref_adj * psi).iter().map(|z| z.norm_sqr()).collect();
                trace.push_sample(t, (&fm * psi).norm_squared(), (&fp * psi).norm_squared(), states, psi.norm());
            };
            // The drive is periodic; when dt divides the period the step propagators repeat.
            let per_period = (period / dt).round();
            let periodic = per_period >= 1.0 && (per_period * dt - period).abs() <= 1e-9 * period;
            let mut cache: Vec<Option<CMatrix>> = vec![None; if periodic { per_period as usize } else { 0 }];
            let mut psi = psi0.clone();
            record(&mut trace, &psi, 0.0);
            for i in 0..full_steps {
                if periodic {
                    let slot = i % cache.len();
                    if cache[slot].is_none() {
                        cache[slot] = Some(step_unitary(&lab.at((slot as f64 + 0.5) * dt, modulation)?, dt)?);
                    }
                    psi = cache[slot].as_ref().expect("filled above") * &psi;
                } else {
                    psi = step_unitary(&lab.at((i as f64 + 0.5) * dt, modulation)?, dt)? * &psi;
                }
                if (i + 1) % stride == 0 {
                    record(&mut trace, &psi, (i + 1) as f64 * dt);
                }
            }
            if let Some(h) = tail {
                let t_mid = full_steps as f64 * dt + 0.5 * h;
                psi = step_unitary(&lab.at(t_mid, modulation)?, h)? * psi;
            }
            if full_steps % stride != 0 || tail.is_some() {
                record(&mut trace, &psi, pulse.duration);
            }
            trace.final_state = psi;
        }
    }
    Ok(trace)
}

fn phase(x: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(x.cos(), x.sin())
}
