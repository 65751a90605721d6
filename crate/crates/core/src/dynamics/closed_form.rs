use crate::error::{Error, Result};
use crate::numerics::linalg::{c, r, CVector};

/// Coefficients on the paired basis, `c~_nu^-` and `c~_nu^+`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairAmplitudes {
    pub minus: CVector,
    pub plus: CVector,
}

impl PairAmplitudes {
    pub fn new(minus: CVector, plus: CVector) -> Self {
        Self { minus, plus }
    }

    /// All weight on `|psi~_nu^->`.
    pub fn ground(n: usize, nu: usize) -> Self {
        let mut minus = CVector::zeros(n);
        minus[nu] = r(1.0);
        Self { minus, plus: CVector::zeros(n) }
    }
}

/// Resonant rotating-frame solution for each coupled pair:
///
/// ```text
/// c~-(t) = cos(W t) c~-(0) - i sin(W t) c~+(0)
/// c~+(t) = cos(W t) c~+(0) - i sin(W t) c~-(0)       W = A sqrt(q_nu)
/// ```
///
/// relative to the common phase `exp(-i (E+ + E-) t / 2)`. A nonzero `detuning` has no closed
/// form here; the caller should integrate the rotating-frame Hamiltonian instead.
pub fn rwa_closed_form(q: &[f64], detuning: f64, amplitude: f64, t: f64, c0: &PairAmplitudes) -> Result<PairAmplitudes> {
    if detuning.abs() > 1e-12 {
        return Err(Error::DetunedNotClosedForm { detuning });
    }
    let n = q.len();
    if c0.minus.len() != n || c0.plus.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: c0.minus.len().min(c0.plus.len()) });
    }
    let mut out = c0.clone();
    for nu in 0..n {
        let w = amplitude * q[nu].max(0.0).sqrt() * t;
        let (cs, sn) = (r(w.cos()), c(0.0, -w.sin()));
        out.minus[nu] = cs * c0.minus[nu] + sn * c0.plus[nu];
        out.plus[nu] = cs * c0.plus[nu] + sn * c0.minus[nu];
    }
    Ok(out)
}
