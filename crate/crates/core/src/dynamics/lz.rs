//! Landau-Zener sweeps in the rotating frame.
//!
//! The resonant rotating-frame Hamiltonian gets an extra `+alpha t` on the lower band and
//! `-alpha t` on the upper band. In the paired basis the problem splits into independent
//! two-level sweeps `[[alpha t, V_nu], [V_nu, -alpha t]]`, `V_nu = A sqrt(q_nu)`, each of which is
//! integrated with exact exponentials of the midpoint Hamiltonian.
//!
//! By default each pair starts in, and is read out from, the instantaneous eigenstate of its
//! two-level Hamiltonian at the window edge that is continuous with the diabatic state. Reading
//! out bare diabatic populations at finite `t` leaves an oscillating error of order
//! `V / (alpha t)`; the dressed edges remove it.

use serde::Serialize;

use super::{DrivePulse, PopulationTrace};
use crate::error::{Error, Result};
use crate::geometry::{LocalGeometry, PairedBasis};
use crate::models::{Band, HamiltonianModel, ParameterPoint};
use crate::numerics::linalg::{c, r, CMatrix, CVector};

/// `|alpha t_edge| / |V|` must reach at least this by default.
pub const MIN_WINDOW_FACTOR: f64 = 20.0;
/// Default half-width of a sweep in units of the transition time `max(V/alpha, 1/sqrt(alpha))`.
pub const DEFAULT_WINDOW_FACTOR: f64 = 30.0;
/// Phase accumulated by the largest diabatic splitting per step.
const STEP_PHASE: f64 = 0.05;
const MAX_SAMPLES: usize = 4096;

/// Initial state of a sweep: a paired lower-band state, or an explicit lab-frame vector.
#[derive(Debug, Clone, PartialEq)]
pub enum LzInitial {
    Pair(usize),
    Vector(CVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LzSweep {
    pub alpha: f64,
    pub t_start: f64,
    pub t_end: f64,
    /// Drive indices, phase and amplitude; the frequency is set to the gap at the working point.
    pub pulse: DrivePulse,
    pub initial: LzInitial,
    /// Required `min(|alpha t_start|, |alpha t_end|) / |V|`.
    pub min_reach: f64,
    /// Extrapolate `P_stay` from this window and one of half the size.
    pub richardson: bool,
    /// Start and read out in the instantaneous eigenstates of each pair at the window edges.
    pub dressed_edges: bool,
}

impl LzSweep {
    /// Symmetric sweep `[-t_edge, t_edge]`.
    pub fn symmetric(alpha: f64, t_edge: f64, pulse: DrivePulse, initial: LzInitial) -> Self {
        Self { alpha, t_start: -t_edge, t_end: t_edge, pulse, initial, min_reach: MIN_WINDOW_FACTOR, richardson: true, dressed_edges: true }
    }

    /// `factor * max(|V|/alpha, 1/sqrt(alpha))`: the window in units of the transition time.
    pub fn edge_time(coupling: f64, alpha: f64, factor: f64) -> f64 {
        factor * (coupling / alpha).max(1.0 / alpha.sqrt())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LzOutcome {
    /// Final population of the initial band, extrapolated over window size when requested.
    pub p_stay: f64,
    /// Raw `P_stay` of the full window, and of the half window when extrapolating.
    pub p_stay_window: f64,
    pub p_stay_half_window: Option<f64>,
    /// Coupling `|V|` used for the asymptotic check.
    pub coupling: f64,
    /// Achieved `min |alpha t_edge| / |V|`.
    pub reach: f64,
    pub steps: usize,
    pub trace: PopulationTrace,
}

/// `exp(-pi A^2 q / alpha)`.
pub fn lz_probability(q: f64, amplitude: f64, alpha: f64) -> f64 {
    (-std::f64::consts::PI * amplitude * amplitude * q.max(0.0) / alpha).exp()
}

struct PairSweep {
    v: Vec<f64>,
    minus: CVector,
    plus: CVector,
}

/// `exp(-i dt [[a, v], [v, -a]])` applied to `(x, y)`.
fn rotate(a: f64, v: f64, dt: f64, x: &mut num_complex::Complex64, y: &mut num_complex::Complex64) {
    let norm = (a * a + v * v).sqrt();
    let (cs, sn) = ((norm * dt).cos(), (norm * dt).sin());
    let s = if norm > 0.0 { sn / norm } else { dt };
    let (x0, y0) = (*x, *y);
    *x = x0 * r(cs) - c(0.0, s) * (x0 * a + y0 * v);
    *y = y0 * r(cs) - c(0.0, s) * (x0 * v - y0 * a);
}

/// Rotation taking diabatic pair components to the instantaneous eigenbasis of
/// `[[a, v], [v, -a]]`, ordered so that each eigenstate is the one continuous with the
/// corresponding diabatic state.
fn dress(a: f64, v: f64, x: &mut num_complex::Complex64, y: &mut num_complex::Complex64, inverse: bool) {
    let theta = if a == 0.0 { std::f64::consts::FRAC_PI_4 * v.signum() } else { 0.5 * (v / a).atan() };
    let (cs, sn) = (theta.cos(), if inverse { -theta.sin() } else { theta.sin() });
    let (x0, y0) = (*x, *y);
    *x = x0 * cs + y0 * sn;
    *y = y0 * cs - x0 * sn;
}

impl PairSweep {
    /// Reinterprets the current components as components on the edge-dressed states at `t`.
    fn dress_in(&mut self, alpha: f64, t: f64) {
        for nu in 0..self.v.len() {
            let (mut x, mut y) = (self.minus[nu], self.plus[nu]);
            dress(alpha * t, self.v[nu], &mut x, &mut y, true);
            self.minus[nu] = x;
            self.plus[nu] = y;
        }
    }

    /// Components on the edge-dressed states at `t`.
    fn dressed_out(&self, alpha: f64, t: f64) -> (CVector, CVector) {
        let (mut m, mut p) = (self.minus.clone(), self.plus.clone());
        for nu in 0..self.v.len() {
            dress(alpha * t, self.v[nu], &mut m[nu], &mut p[nu], false);
        }
        (m, p)
    }

    fn run(&mut self, alpha: f64, t0: f64, t1: f64, dt: f64, mut record: impl FnMut(f64, &CVector, &CVector)) -> usize {
        let steps = ((t1 - t0) / dt).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        let stride = steps.div_ceil(MAX_SAMPLES).max(1);
        record(t0, &self.minus, &self.plus);
        for i in 0..steps {
            let a = alpha * (t0 + (i as f64 + 0.5) * h);
            for nu in 0..self.v.len() {
                let (mut x, mut y) = (self.minus[nu], self.plus[nu]);
                rotate(a, self.v[nu], h, &mut x, &mut y);
                self.minus[nu] = x;
                self.plus[nu] = y;
            }
            if (i + 1) % stride == 0 || i + 1 == steps {
                record(t0 + (i + 1) as f64 * h, &self.minus, &self.plus);
            }
        }
        steps
    }
}

/// Integrates one sweep. `dt` defaults to a step resolving the largest diabatic splitting.
pub fn lz_run<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    sweep: &LzSweep,
    dt: Option<f64>,
) -> Result<LzOutcome> {
    let geo = LocalGeometry::new(model, lambda)?;
    lz_run_with(&geo, sweep, dt)
}

pub(crate) fn lz_run_with(geo: &LocalGeometry, sweep: &LzSweep, dt: Option<f64>) -> Result<LzOutcome> {
    let pulse = sweep.pulse.resonant_with(&geo.bands);
    if !(sweep.alpha > 0.0 && sweep.alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("sweep rate must be positive, got {}", sweep.alpha)));
    }
    if !(sweep.t_start < 0.0 && sweep.t_end > 0.0) {
        return Err(Error::InvalidArgument("sweep window must satisfy t_start < 0 < t_end".into()));
    }
    let paired = geo.paired_basis(pulse.coupling())?;
    let v: Vec<f64> = paired.q.iter().map(|q| pulse.amplitude * q.sqrt()).collect();
    let (c_minus, c_plus) = initial_amplitudes(geo, &paired, &sweep.initial)?;
    let initial_band = if c_minus.norm_squared() >= c_plus.norm_squared() { Band::Minus } else { Band::Plus };

    let coupling = match &sweep.initial {
        LzInitial::Pair(nu) => v[*nu],
        LzInitial::Vector(_) => v.iter().cloned().fold(0.0, f64::max),
    };
    let edge = sweep.t_start.abs().min(sweep.t_end);
    let reach = if coupling > 0.0 { sweep.alpha * edge / coupling } else { f64::INFINITY };
    if reach < sweep.min_reach {
        return Err(Error::AsymptoticViolation { reach, required: sweep.min_reach });
    }
    let v_max = v.iter().cloned().fold(0.0, f64::max);
    let dt = dt.unwrap_or_else(|| STEP_PHASE / (2.0 * sweep.alpha * sweep.t_end.max(-sweep.t_start) + 2.0 * v_max));
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }

    let stay = |m: &CVector, p: &CVector| match initial_band {
        Band::Minus => m.norm_squared(),
        Band::Plus => p.norm_squared(),
    };
    let mut trace = PopulationTrace::default();
    let mut pairs = PairSweep { v: v.clone(), minus: c_minus.clone(), plus: c_plus.clone() };
    if sweep.dressed_edges {
        pairs.dress_in(sweep.alpha, sweep.t_start);
    }
    let steps = pairs.run(sweep.alpha, sweep.t_start, sweep.t_end, dt, |t, m, p| {
        let states = m.iter().chain(p.iter()).map(|z| z.norm_sqr()).collect();
        let norm = (m.norm_squared() + p.norm_squared()).sqrt();
        trace.push_sample(t, m.norm_squared(), p.norm_squared(), states, norm);
    });
    trace.sample_dt = trace.times.get(1).map(|t| t - trace.times[0]).unwrap_or(0.0);
    trace.final_state = &paired.minus * &pairs.minus + &paired.plus * &pairs.plus;
    let p_window = if sweep.dressed_edges {
        let (m, p) = pairs.dressed_out(sweep.alpha, sweep.t_end);
        stay(&m, &p)
    } else {
        stay(&pairs.minus, &pairs.plus)
    };

    let mut p_half = None;
    let mut p_stay = p_window;
    if sweep.richardson && coupling > 0.0 {
        let mut inner = PairSweep { v, minus: c_minus, plus: c_plus };
        if sweep.dressed_edges {
            inner.dress_in(sweep.alpha, 0.5 * sweep.t_start);
        }
        inner.run(sweep.alpha, 0.5 * sweep.t_start, 0.5 * sweep.t_end, dt, |_, _, _| {});
        let p = if sweep.dressed_edges {
            let (m, p) = inner.dressed_out(sweep.alpha, 0.5 * sweep.t_end);
            stay(&m, &p)
        } else {
            stay(&inner.minus, &inner.plus)
        };
        p_half = Some(p);
        // Edge corrections fall off as (V / alpha t)^2.
        p_stay = ((4.0 * p_window - p) / 3.0).clamp(0.0, 1.0);
    }
    Ok(LzOutcome { p_stay, p_stay_window: p_window, p_stay_half_window: p_half, coupling, reach, steps, trace })
}

fn initial_amplitudes(geo: &LocalGeometry, paired: &PairedBasis, initial: &LzInitial) -> Result<(CVector, CVector)> {
    let n = paired.degeneracy();
    match initial {
        LzInitial::Pair(nu) => {
            if *nu >= n {
                return Err(Error::IndexOutOfRange { index: *nu, limit: n });
            }
            let mut m = CVector::zeros(n);
            m[*nu] = r(1.0);
            Ok((m, CVector::zeros(n)))
        }
        LzInitial::Vector(psi) => {
            let dim = geo.bands.dim();
            if psi.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: psi.len() });
            }
            if (psi.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("initial state norm {} is not 1", psi.norm())));
            }
            let m: CMatrix = paired.minus.adjoint();
            let p: CMatrix = paired.plus.adjoint();
            Ok((m * psi, p * psi))
        }
    }
}
