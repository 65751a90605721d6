//! Two flat bands rotated by exponentials of band-coupling generators.
//!
//! `H(lambda) = R H0 R^dagger`, `H0 = diag(-gap/2 (N times), +gap/2 (N times))`,
//! `R = exp(-i lambda_1 G_1) ... exp(-i lambda_M G_M)` and
//!
//! ```text
//! G_i = [[0, Y_i], [Y_i^dagger, 0]]
//! ```
//!
//! At `lambda = 0` this gives `Q^-_ij = Y_i Y_j^dagger` in the computational frame, so the QGT is
//! prescribed exactly: with `Y_1 = diag(sqrt q)` the eigenvalues of `Q^-_11` are the entries
//! of `q`. This is how scenarios with chosen Rabi frequency ratios are set up.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{finite_setting, HamiltonianModel, ParameterPoint};
use crate::error::{Error, Result};
use crate::numerics::linalg::{c, hermitian_function, r, CMatrix, I};
use crate::numerics::HermitianMatrix;

#[derive(Debug, Clone)]
pub struct PairsModel {
    gap: f64,
    n: usize,
    h0: CMatrix,
    generators: Vec<HermitianMatrix>,
}

impl PairsModel {
    pub fn from_blocks(gap: f64, blocks: Vec<CMatrix>) -> Result<Self> {
        let gap = finite_setting("gap", gap)?;
        if gap <= 0.0 {
            return Err(Error::InvalidSetting { key: "gap".into(), reason: "must be positive".into() });
        }
        let n = blocks.first().map(|b| b.nrows()).unwrap_or(0);
        if n == 0 || blocks.iter().any(|b| b.nrows() != n || b.ncols() != n) {
            return Err(Error::InvalidSetting { key: "q".into(), reason: "coupling blocks must be square and non-empty".into() });
        }
        let diag: Vec<f64> = (0..2 * n).map(|i| if i < n { -0.5 * gap } else { 0.5 * gap }).collect();
        let generators = blocks
            .into_iter()
            .map(|y| {
                let mut g = CMatrix::zeros(2 * n, 2 * n);
                g.view_mut((0, n), (n, n)).copy_from(&y);
                g.view_mut((n, 0), (n, n)).copy_from(&y.adjoint());
                HermitianMatrix::symmetrized(g)
            })
            .collect();
        Ok(Self { gap, n, h0: HermitianMatrix::from_diagonal(&diag).into_matrix(), generators })
    }

    /// `Y_1 = diag(sqrt q)`, and optionally `Y_2 = i diag(sqrt q_second)`.
    pub fn prescribed(gap: f64, q: &[f64], q_second: Option<&[f64]>) -> Result<Self> {
        let diag = |key: &str, q: &[f64], phase: num_complex::Complex64| -> Result<CMatrix> {
            if q.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
                return Err(Error::InvalidSetting { key: key.into(), reason: "entries must be finite and >= 0".into() });
            }
            let d = nalgebra::DVector::from_iterator(q.len(), q.iter().map(|&x| phase * x.sqrt()));
            Ok(CMatrix::from_diagonal(&d))
        };
        let mut blocks = vec![diag("q", q, r(1.0))?];
        if let Some(q2) = q_second {
            if q2.len() != q.len() {
                return Err(Error::InvalidSetting { key: "q_second".into(), reason: "length must match q".into() });
            }
            blocks.push(diag("q_second", q2, I)?);
        }
        Self::from_blocks(gap, blocks)
    }

    /// `params` generators whose blocks have entries uniform in `[-1, 1) + i [-1, 1)`, scaled by
    /// `1/sqrt(n)`, drawn from ChaCha8 seeded with `seed`.
    pub fn seeded(gap: f64, n: usize, params: usize, seed: u64) -> Result<Self> {
        if n == 0 || params == 0 {
            return Err(Error::InvalidSetting { key: "degeneracy".into(), reason: "degeneracy and params must be positive".into() });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (n as f64).sqrt();
        let blocks = (0..params)
            .map(|_| {
                CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * r(scale))
            })
            .collect();
        Self::from_blocks(gap, blocks)
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    fn factor(&self, i: usize, l: f64) -> CMatrix {
        hermitian_function(&self.generators[i], |g| c(0.0, -l * g).exp()).expect("generator eigendecomposition")
    }
}

impl HamiltonianModel for PairsModel {
    fn name(&self) -> &str {
        "pairs"
    }

    fn dim(&self) -> usize {
        2 * self.n
    }

    fn param_count(&self) -> usize {
        self.generators.len()
    }

    fn evaluate(&self, lambda: &ParameterPoint) -> Result<HermitianMatrix> {
        self.check_point(lambda)?;
        let mut rot = CMatrix::identity(self.dim(), self.dim());
        for (i, &l) in lambda.values().iter().enumerate() {
            rot *= self.factor(i, l);
        }
        Ok(HermitianMatrix::symmetrized(&rot * &self.h0 * rot.adjoint()))
    }

    fn gradient(&self, lambda: &ParameterPoint, j: usize) -> Result<HermitianMatrix> {
        self.check_point(lambda)?;
        self.check_index(j)?;
        // dH/dl_j = -i [K_j, H] with K_j = L_j G_j L_j^dagger, L_j the product of earlier factors.
        let mut prefix = CMatrix::identity(self.dim(), self.dim());
        for (i, &l) in lambda.values().iter().enumerate().take(j) {
            prefix *= self.factor(i, l);
        }
        let k = &prefix * self.generators[j].matrix() * prefix.adjoint();
        let h = self.evaluate(lambda)?.into_matrix();
        Ok(HermitianMatrix::symmetrized((&k * &h - &h * &k) * (-I)))
    }
}
