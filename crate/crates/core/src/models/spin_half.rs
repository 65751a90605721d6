use super::gamma::pauli;
use super::{finite_setting, HamiltonianModel, ParameterPoint};
use crate::error::{Error, Result};
use crate::numerics::linalg::{r, CMatrix};
use crate::numerics::HermitianMatrix;

/// Spin-1/2 in a field of fixed magnitude:
/// `H = (delta/2) (sin t cos p s1 + sin t sin p s2 + cos t s3)` with `lambda = (t, p)`.
///
/// The Abelian reference case: `N = 1`, every QGT block is a scalar.
#[derive(Debug, Clone)]
pub struct SpinHalf {
    delta: f64,
    sigma: [CMatrix; 3],
}

impl SpinHalf {
    pub fn new(delta: f64) -> Result<Self> {
        let delta = finite_setting("delta", delta)?;
        if delta <= 0.0 {
            return Err(Error::InvalidSetting { key: "delta".into(), reason: "must be positive".into() });
        }
        Ok(Self { delta, sigma: pauli() })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    fn combine(&self, v: [f64; 3]) -> HermitianMatrix {
        let m = &self.sigma[0] * r(v[0]) + &self.sigma[1] * r(v[1]) + &self.sigma[2] * r(v[2]);
        HermitianMatrix::symmetrized(m * r(0.5 * self.delta))
    }
}

impl HamiltonianModel for SpinHalf {
    fn name(&self) -> &str {
        "spin_half"
    }

    fn dim(&self) -> usize {
        2
    }

    fn param_count(&self) -> usize {
        2
    }

    fn evaluate(&self, lambda: &ParameterPoint) -> Result<HermitianMatrix> {
        self.check_point(lambda)?;
        let (t, p) = (lambda.values()[0], lambda.values()[1]);
        Ok(self.combine([t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]))
    }

    fn gradient(&self, lambda: &ParameterPoint, j: usize) -> Result<HermitianMatrix> {
        self.check_point(lambda)?;
        self.check_index(j)?;
        let (t, p) = (lambda.values()[0], lambda.values()[1]);
        Ok(match j {
            0 => self.combine([t.cos() * p.cos(), t.cos() * p.sin(), -t.sin()]),
            _ => self.combine([-t.sin() * p.sin(), t.sin() * p.cos(), 0.0]),
        })
    }
}
