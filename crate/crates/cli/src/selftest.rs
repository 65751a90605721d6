//! Fast invariant checks against closed forms and independent oracles.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

use georabi::dynamics::{lz_probability, rwa_closed_form, PairAmplitudes};
use georabi::geometry::{curvature, metric, qgt_fd, Coupling, LocalGeometry};
use georabi::models::{builtin_model, random_unitary, Band, HamiltonianModel, ModelSettings, ParameterPoint};
use georabi::numerics::linalg::{c, max_abs, max_diff};
use georabi::numerics::{CMatrix, CVector, HermitianMatrix, Propagator};
use georabi::protocols::{hadamard_in_subspace, plan_preparation, Partition, PlanRequest};
use georabi::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::output::blob_hash;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip)]
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub passed: bool,
    /// Hash over names, values and verdicts. Timings are excluded.
    pub hash: String,
}

type Probe = fn() -> Result<f64>;

pub const CHECKS: [(&str, f64, Probe); 10] = [
    ("spin_half_closed_form", 1e-12, spin_half_closed_form),
    ("qgt_matches_finite_difference", 1e-6, qgt_oracle),
    ("two_tone_identities", 1e-12, two_tone_identities),
    ("coupling_spectrum_gauge_invariant", 1e-10, gauge_invariance),
    ("propagator_unitarity", 1e-11, propagator_unitarity),
    ("closed_form_pair_weight", 1e-12, closed_form_weight),
    ("closed_form_pair_frequency", 1e-12, closed_form_frequency),
    ("landau_zener_formula", 1e-15, landau_zener),
    ("plan_fidelity_pi_ratio", 5e-6, plan_fidelity),
    ("hadamard_involution", 1e-12, hadamard),
];

pub fn names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.0).collect()
}

/// Runs every check. `inject` forces the named check to fail by zeroing its tolerance.
pub fn run(inject: Option<&str>) -> Report {
    let checks: Vec<Check> = CHECKS
        .iter()
        .map(|&(name, tol, probe)| {
            let tolerance = if inject == Some(name) { 0.0 } else { tol };
            let start = Instant::now();
            let value = probe().unwrap_or(f64::INFINITY);
            let seconds = start.elapsed().as_secs_f64();
            Check { name, value, tolerance, pass: inject != Some(name) && value.is_finite() && value <= tolerance, seconds }
        })
        .collect();
    let passed = checks.iter().all(|c| c.pass);
    let digest: String = checks.iter().map(|c| format!("{} {:.6e} {:.1e} {}\n", c.name, c.value, c.tolerance, c.pass)).collect();
    Report { checks, passed, hash: blob_hash(digest.as_bytes()) }
}

fn generic() -> Result<(Box<dyn HamiltonianModel>, ParameterPoint)> {
    let m = builtin_model("dirac4_generic", &ModelSettings::default())?;
    Ok((m, ParameterPoint::new(vec![0.3, -0.7, 1.1, 0.4])?))
}

fn spin_half_closed_form() -> Result<f64> {
    let m = builtin_model("spin_half", &ModelSettings::default())?;
    let theta = 0.9;
    let geo = LocalGeometry::new(m.as_ref(), &ParameterPoint::new(vec![theta, 0.4])?)?;
    let q = |j, k| -> Result<CMatrix> { Ok(geo.qgt(Band::Minus, j, k)?.matrix) };
    let g_tt = metric(&geo.qgt(Band::Minus, 0, 0)?).matrix()[(0, 0)].re;
    let g_pp = metric(&geo.qgt(Band::Minus, 1, 1)?).matrix()[(0, 0)].re;
    let f_tp = curvature(&geo.qgt(Band::Minus, 0, 1)?).matrix()[(0, 0)].re;
    let off = q(0, 1)?[(0, 0)].re;
    Ok([
        (g_tt - 0.25).abs(),
        (g_pp - 0.25 * theta.sin().powi(2)).abs(),
        (f_tp.abs() - 0.5 * theta.sin()).abs(),
        off.abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

fn qgt_oracle() -> Result<f64> {
    let (m, lambda) = generic()?;
    let geo = LocalGeometry::new(m.as_ref(), &lambda)?;
    let mut worst: f64 = 0.0;
    for band in [Band::Minus, Band::Plus] {
        for (j, k) in [(0, 0), (1, 2), (3, 1)] {
            let a = geo.qgt(band, j, k)?.matrix;
            let b = qgt_fd(m.as_ref(), &lambda, band, j, k, 1e-4)?.matrix;
            worst = worst.max(max_diff(&a, &b) / max_abs(&a).max(1e-12));
        }
    }
    Ok(worst)
}

fn two_tone_identities() -> Result<f64> {
    let (m, lambda) = generic()?;
    let geo = LocalGeometry::new(m.as_ref(), &lambda)?;
    let mut worst: f64 = 0.0;
    for band in [Band::Minus, Band::Plus] {
        let (j, k) = (0, 2);
        let sum = geo.qgt(band, j, j)?.matrix + geo.qgt(band, k, k)?.matrix;
        let q = geo.qgt(band, j, k)?;
        let half = geo.coupling_operator(band, Coupling::TwoTone { j, k, phase: FRAC_PI_2 })?.matrix;
        let zero = geo.coupling_operator(band, Coupling::TwoTone { j, k, phase: 0.0 })?.matrix;
        let f = curvature(&q).matrix() * c(band.sign(), 0.0);
        let g = metric(&q).matrix() * c(2.0, 0.0);
        let scale = max_abs(&sum).max(1.0);
        worst = worst.max(max_diff(&(half - &sum), &f) / scale).max(max_diff(&(zero - &sum), &g) / scale);
    }
    Ok(worst)
}

fn gauge_invariance() -> Result<f64> {
    let (m, lambda) = generic()?;
    let geo = LocalGeometry::new(m.as_ref(), &lambda)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let n = geo.degeneracy();
    let other = geo.regauged(&random_unitary(&mut rng, n), &random_unitary(&mut rng, n));
    let coupling = Coupling::TwoTone { j: 1, k: 3, phase: 0.6 };
    let mut worst: f64 = 0.0;
    for band in [Band::Minus, Band::Plus] {
        let a = geo.diagonalize(&geo.coupling_operator(band, coupling)?)?.eigenvalues;
        let b = other.diagonalize(&other.coupling_operator(band, coupling)?)?.eigenvalues;
        worst = a.iter().zip(&b).fold(worst, |w, (x, y)| w.max((x - y).abs()));
    }
    Ok(worst)
}

fn propagator_unitarity() -> Result<f64> {
    let (m, lambda) = generic()?;
    let h: HermitianMatrix = m.evaluate(&lambda)?;
    let u = Propagator::new(&h, 0.37)?;
    let id = CMatrix::identity(h.dim(), h.dim());
    Ok(max_diff(&(u.unitary() * u.unitary().adjoint()), &id))
}

fn closed_form_weight() -> Result<f64> {
    let q = [0.3, 0.05, 0.0];
    let c0 = PairAmplitudes::new(CVector::from_element(3, c(1.0 / 3f64.sqrt(), 0.0)), CVector::zeros(3));
    let out = rwa_closed_form(&q, 0.0, 0.03, 417.0, &c0)?;
    Ok((0..3).map(|nu| (out.minus[nu].norm_sqr() + out.plus[nu].norm_sqr() - 1.0 / 3.0).abs()).fold(0.0, f64::max))
}

fn closed_form_frequency() -> Result<f64> {
    // A pair started in the lower band returns after one population period pi / Omega.
    let (q, a) = (0.3f64, 0.03);
    let omega = a * q.sqrt();
    let c0 = PairAmplitudes::ground(1, 0);
    let full = rwa_closed_form(&[q], 0.0, a, PI / omega, &c0)?;
    let half = rwa_closed_form(&[q], 0.0, a, PI / (2.0 * omega), &c0)?;
    Ok((full.minus[0].norm_sqr() - 1.0).abs().max((half.plus[0].norm_sqr() - 1.0).abs()))
}

fn landau_zener() -> Result<f64> {
    let (q, a, alpha) = (0.4, 0.05, 0.01);
    Ok((lz_probability(q, a, alpha) - (-PI * a * a * q / alpha).exp()).abs())
}

fn plan_fidelity() -> Result<f64> {
    let plan = plan_preparation(&[1.0, PI], &Partition::new(vec![0], vec![1]), &PlanRequest::new(200.0).with_n(3))?;
    Ok((plan.predicted_fidelity - 0.97259).abs())
}

fn hadamard() -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let frame = random_unitary(&mut rng, 6).columns(0, 3).into_owned();
    let h = hadamard_in_subspace(&frame, (0, 2))?;
    let id = CMatrix::identity(6, 6);
    Ok(max_diff(&(&h * h.adjoint()), &id).max(max_diff(&(&h * &h), &id)))
}
