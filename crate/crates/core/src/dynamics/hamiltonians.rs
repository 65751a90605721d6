use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::DrivePulse;
use crate::error::Result;
use crate::geometry::LocalGeometry;
use crate::models::{Band, BandDecomposition, HamiltonianModel, ParameterPoint};
use crate::numerics::linalg::{c, r, CMatrix, CVector};
use crate::numerics::HermitianMatrix;

/// How the parameter modulation enters the lab-frame Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulation {
    /// `H0(lambda) + sum_i f_i(t) dH/dl_i`.
    Linear,
    /// `H0(lambda + sum_i f_i(t) e_i)`.
    Exact,
}

/// Lab-frame Hamiltonian of a drive at a fixed working point.
pub struct LabDrive<'a, M: HamiltonianModel + ?Sized> {
    model: &'a M,
    lambda: ParameterPoint,
    pulse: DrivePulse,
    h0: CMatrix,
    dj: CMatrix,
    dk: Option<CMatrix>,
}

impl<'a, M: HamiltonianModel + ?Sized> LabDrive<'a, M> {
    pub fn new(model: &'a M, lambda: &ParameterPoint, pulse: &DrivePulse) -> Result<Self> {
        model.check_point(lambda)?;
        model.check_index(pulse.j)?;
        if let Some(k) = pulse.k {
            model.check_index(k)?;
        }
        Ok(Self {
            model,
            lambda: lambda.clone(),
            pulse: *pulse,
            h0: model.evaluate(lambda)?.into_matrix(),
            dj: model.gradient(lambda, pulse.j)?.into_matrix(),
            dk: pulse.k.map(|k| model.gradient(lambda, k).map(HermitianMatrix::into_matrix)).transpose()?,
        })
    }

    /// Parameter displacements `(2A/omega) cos(omega t)` and `(2A/omega) cos(omega t + phase)`.
    pub fn displacements(&self, t: f64) -> (f64, f64) {
        let p = &self.pulse;
        let s = 2.0 * p.amplitude / p.omega;
        (s * (p.omega * t).cos(), s * (p.omega * t + p.phase).cos())
    }

    pub fn at(&self, t: f64, modulation: Modulation) -> Result<HermitianMatrix> {
        let (fj, fk) = self.displacements(t);
        match modulation {
            Modulation::Linear => {
                let mut h = &self.h0 + &self.dj * r(fj);
                if let Some(dk) = &self.dk {
                    h += dk * r(fk);
                }
                Ok(HermitianMatrix::symmetrized(h))
            }
            Modulation::Exact => {
                let mut v = self.lambda.values().to_vec();
                v[self.pulse.j] += fj;
                if let Some(k) = self.pulse.k {
                    v[k] += fk;
                }
                self.model.evaluate(&ParameterPoint::new(v)?)
            }
        }
    }
}

/// `H(t)` in the lab frame. `modulation` selects the linearized or the exactly shifted form.
pub fn lab_hamiltonian<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    pulse: &DrivePulse,
    t: f64,
    modulation: Modulation,
) -> Result<HermitianMatrix> {
    LabDrive::new(model, lambda, pulse)?.at(t, modulation)
}

/// Rotating-frame Hamiltonian in the band basis `[F- | F+]`:
///
/// ```text
/// [ (E- + w/2) 1      W          ]
/// [ W^dagger          (E+ - w/2) 1 ]
/// ```
///
/// with `W = (A / gap) (C_j + e^{i phase} C_k)`, `C_j = F-^dagger dH/dl_j F+`.
#[derive(Debug, Clone)]
pub struct RwaHamiltonian {
    pub matrix: HermitianMatrix,
    pub bands: BandDecomposition,
    /// Off-diagonal block `W`.
    pub coupling: CMatrix,
    pub omega: f64,
}

impl RwaHamiltonian {
    pub fn from_geometry(geo: &LocalGeometry, pulse: &DrivePulse) -> Result<Self> {
        let bands = geo.bands.clone();
        let n = bands.degeneracy();
        let w = geo.drive_block(pulse.coupling())? * r(pulse.amplitude / bands.gap());
        let mut m = CMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            m[(i, i)] = r(bands.energy_minus + 0.5 * pulse.omega);
            m[(n + i, n + i)] = r(bands.energy_plus - 0.5 * pulse.omega);
        }
        m.view_mut((0, n), (n, n)).copy_from(&w);
        m.view_mut((n, 0), (n, n)).copy_from(&w.adjoint());
        Ok(Self { matrix: HermitianMatrix::symmetrized(m), bands, coupling: w, omega: pulse.omega })
    }

    pub fn degeneracy(&self) -> usize {
        self.bands.degeneracy()
    }

    /// Lab-frame state at time `t` from rotating-frame band coordinates `b`.
    pub fn to_lab(&self, b: &CVector, t: f64) -> CVector {
        let n = self.degeneracy();
        let (em, ep) = (phase(0.5 * self.omega * t), phase(-0.5 * self.omega * t));
        &self.bands.frame_minus * b.rows(0, n) * em + &self.bands.frame_plus * b.rows(n, n) * ep
    }

    /// Rotating-frame band coordinates of the lab-frame state `psi` at time `t`.
    pub fn from_lab(&self, psi: &CVector, t: f64) -> CVector {
        let n = self.degeneracy();
        let (em, ep) = (phase(-0.5 * self.omega * t), phase(0.5 * self.omega * t));
        let mut b = CVector::zeros(2 * n);
        b.rows_mut(0, n).copy_from(&(self.bands.frame_minus.adjoint() * psi * em));
        b.rows_mut(n, n).copy_from(&(self.bands.frame_plus.adjoint() * psi * ep));
        b
    }

    /// Band-coordinate populations `(P-, P+)`.
    pub fn band_populations(&self, b: &CVector) -> (f64, f64) {
        let n = self.degeneracy();
        (b.rows(0, n).norm_squared(), b.rows(n, n).norm_squared())
    }

    pub fn band_block(&self, band: Band) -> std::ops::Range<usize> {
        let n = self.degeneracy();
        match band {
            Band::Minus => 0..n,
            Band::Plus => n..2 * n,
        }
    }
}

fn phase(x: f64) -> Complex64 {
    c(x.cos(), x.sin())
}

pub fn rwa_hamiltonian<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    pulse: &DrivePulse,
) -> Result<RwaHamiltonian> {
    RwaHamiltonian::from_geometry(&LocalGeometry::new(model, lambda)?, pulse)
}
