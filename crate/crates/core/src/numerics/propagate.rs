//! Short-time unitary propagation with `hbar = 1`.
//!
//! Each step applies the exact exponential of the Hamiltonian frozen at the step midpoint,
//! so every step is unitary to rounding error.

use nalgebra::DVector;

use super::linalg::{c, hermitian_eig, CMatrix, CVector, HermitianMatrix};
use crate::error::{Error, Result};

/// `exp(-i H dt)` via the eigendecomposition of `H`.
pub fn step_unitary(h: &HermitianMatrix, dt: f64) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let phases = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|&e| c(0.0, -e * dt).exp()));
    Ok(&eig.vectors * CMatrix::from_diagonal(&phases) * eig.vectors.adjoint())
}

/// One midpoint-exponential step: `exp(-i H_mid dt) psi`.
pub fn propagate_step(h_mid: &HermitianMatrix, psi: &CVector, dt: f64) -> Result<CVector> {
    if psi.len() != h_mid.dim() {
        return Err(Error::DimensionMismatch { expected: h_mid.dim(), got: psi.len() });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("state norm {norm} differs from 1")));
    }
    Ok(step_unitary(h_mid, dt)? * psi)
}

/// Cached step operator for a time-independent Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    unitary: CMatrix,
    dt: f64,
}

impl Propagator {
    pub fn new(h: &HermitianMatrix, dt: f64) -> Result<Self> {
        Ok(Self { unitary: step_unitary(h, dt)?, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn unitary(&self) -> &CMatrix {
        &self.unitary
    }

    pub fn apply(&self, psi: &CVector) -> CVector {
        &self.unitary * psi
    }
}
