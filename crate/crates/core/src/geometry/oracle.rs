//! Frame-derivative evaluation of `<d_j psi_nu| (1 - P) |d_k psi_mu>`.
//!
//! Independent of the resolvent form: only `evaluate` is called, never `gradient`.

use super::QGTensor;
use crate::error::{Error, Result};
use crate::models::{decompose_bands, Band, HamiltonianModel, ParameterPoint};
use crate::numerics::linalg::{polar_unitary, r, CMatrix};

pub const DEFAULT_ORACLE_STEP: f64 = 1e-4;

/// Smallest singular value of a frame overlap accepted for alignment.
const MIN_OVERLAP_SINGULAR: f64 = 0.5;

fn aligned_frame<M: HamiltonianModel + ?Sized>(
    model: &M,
    at: &ParameterPoint,
    band: Band,
    reference: &CMatrix,
    tol: f64,
) -> Result<CMatrix> {
    let bands = decompose_bands(model, at, Some(tol))?;
    let frame = bands.frame(band);
    let (u, smin) = polar_unitary(&(frame.adjoint() * reference))
        .ok_or(Error::NonConvergence { dim: reference.ncols() })?;
    if smin < MIN_OVERLAP_SINGULAR {
        return Err(Error::AlignmentSingular { min_singular: smin });
    }
    Ok(frame * u)
}

fn frame_derivative<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    band: Band,
    j: usize,
    h: f64,
    reference: &CMatrix,
    tol: f64,
) -> Result<CMatrix> {
    let plus = aligned_frame(model, &lambda.shifted(j, h), band, reference, tol)?;
    let minus = aligned_frame(model, &lambda.shifted(j, -h), band, reference, tol)?;
    Ok((plus - minus) * r(0.5 / h))
}

/// QGT block from central differences of parallel-transport aligned band frames.
///
/// The result is expressed in the gauge of `decompose_bands(model, lambda)`, the same gauge
/// as [`super::qgt_resolvent`].
pub fn qgt_fd<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    band: Band,
    j: usize,
    k: usize,
    h: f64,
) -> Result<QGTensor> {
    model.check_index(j)?;
    model.check_index(k)?;
    if !(1e-6..=1e-2).contains(&h) {
        return Err(Error::InvalidArgument(format!("oracle step {h:e} outside [1e-6, 1e-2]")));
    }
    let bands = decompose_bands(model, lambda, None)?;
    let frame = bands.frame(band).clone();
    let complement = CMatrix::identity(bands.dim(), bands.dim()) - bands.projector(band);
    let dj = frame_derivative(model, lambda, band, j, h, &frame, bands.grouping_tol)?;
    let dk = if k == j { dj.clone() } else { frame_derivative(model, lambda, band, k, h, &frame, bands.grouping_tol)? };
    Ok(QGTensor { band, j, k, matrix: dj.adjoint() * complement * dk })
}
