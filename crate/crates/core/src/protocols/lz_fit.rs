use std::f64::consts::PI;

use serde::Serialize;

use crate::dynamics::{lz_run, DrivePulse, LzInitial, LzSweep, DEFAULT_WINDOW_FACTOR};
use crate::error::{Error, Result};
use crate::geometry::LocalGeometry;
use crate::models::{HamiltonianModel, ParameterPoint};

/// Relative RMS fit residual above which the extraction is rejected.
pub const FIT_RESIDUAL_LIMIT: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct LzFitOptions {
    /// Fixed half-window `t_edge`; chosen per `alpha` from `window_factor` when absent.
    pub t_edge: Option<f64>,
    pub window_factor: f64,
    pub dt: Option<f64>,
    /// Independent estimate (e.g. from spectroscopy) to compare against.
    pub cross_check_q: Option<f64>,
}

impl Default for LzFitOptions {
    fn default() -> Self {
        Self { t_edge: None, window_factor: DEFAULT_WINDOW_FACTOR, dt: None, cross_check_q: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LzFit {
    pub nu: usize,
    pub amplitude: f64,
    pub alphas: Vec<f64>,
    pub p_stay: Vec<f64>,
    pub fitted_q: f64,
    /// Relative RMS deviation of `-ln P_stay` from the fitted law.
    pub residual: f64,
    /// Coupling eigenvalue of the pair from the geometry.
    pub reference_q: f64,
    pub relative_error: f64,
    /// Relative deviation from `cross_check_q`, when given.
    pub cross_check_deviation: Option<f64>,
}

/// Sweeps pair `nu` through resonance at every rate in `alphas` and fits
/// `-ln P_stay = pi A^2 q / alpha` by least squares in the relative residual; for
/// `alpha >> A^2 q` this is the linear law `1 - P_stay = pi A^2 q / alpha`.
pub fn lz_extraction<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    pulse: &DrivePulse,
    alphas: &[f64],
    nu: usize,
    options: &LzFitOptions,
) -> Result<LzFit> {
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("no sweep rates given".into()));
    }
    let geo = LocalGeometry::new(model, lambda)?;
    let pulse = pulse.resonant_with(&geo.bands);
    let pb = geo.paired_basis(pulse.coupling())?;
    if nu >= pb.degeneracy() {
        return Err(Error::IndexOutOfRange { index: nu, limit: pb.degeneracy() });
    }
    let reference_q = pb.q[nu];
    let v = pulse.amplitude * reference_q.sqrt();
    let mut p_stay = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let t_edge = options.t_edge.unwrap_or_else(|| LzSweep::edge_time(v, alpha, options.window_factor));
        let sweep = LzSweep::symmetric(alpha, t_edge, pulse, LzInitial::Pair(nu));
        p_stay.push(lz_run(model, lambda, &sweep, options.dt)?.p_stay);
    }
    let limit = FIT_RESIDUAL_LIMIT;
    if p_stay.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::FitPoor { residual: f64::INFINITY, limit });
    }
    // With weights 1/x^2 the slope through the origin is the mean of y/x.
    let ratios: Vec<f64> =
        alphas.iter().zip(&p_stay).map(|(&a, &p)| -p.ln() / (PI * pulse.amplitude.powi(2) / a)).collect();
    let fitted_q = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let residual = (ratios.iter().map(|x| (x / fitted_q - 1.0).powi(2)).sum::<f64>() / ratios.len() as f64).sqrt();
    if residual > limit {
        return Err(Error::FitPoor { residual, limit });
    }
    Ok(LzFit {
        nu,
        amplitude: pulse.amplitude,
        alphas: alphas.to_vec(),
        p_stay,
        fitted_q,
        residual,
        reference_q,
        relative_error: (fitted_q - reference_q).abs() / reference_q.max(f64::MIN_POSITIVE),
        cross_check_deviation: options.cross_check_q.map(|q| (fitted_q - q).abs() / q.abs().max(f64::MIN_POSITIVE)),
    })
}
