use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HamiltonianModel, ParameterPoint};
use crate::error::Result;
use crate::numerics::linalg::{c, CMatrix};
use crate::numerics::HermitianMatrix;

/// Random unitary from the QR factor of a matrix with uniform complex entries.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    a.qr().q()
}

/// Wraps a model and rotates its band frames by fixed unitaries at every point.
#[derive(Debug, Clone)]
pub struct Regauged<M> {
    pub inner: M,
    pub w_minus: CMatrix,
    pub w_plus: CMatrix,
}

impl<M: HamiltonianModel> Regauged<M> {
    pub fn random(inner: M, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = inner.degeneracy();
        let w_minus = random_unitary(&mut rng, n);
        let w_plus = random_unitary(&mut rng, n);
        Self { inner, w_minus, w_plus }
    }
}

impl<M: HamiltonianModel> HamiltonianModel for Regauged<M> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn param_count(&self) -> usize {
        self.inner.param_count()
    }

    fn degeneracy(&self) -> usize {
        self.inner.degeneracy()
    }

    fn evaluate(&self, lambda: &ParameterPoint) -> Result<HermitianMatrix> {
        self.inner.evaluate(lambda)
    }

    fn gradient(&self, lambda: &ParameterPoint, j: usize) -> Result<HermitianMatrix> {
        self.inner.gradient(lambda, j)
    }

    fn frame_gauge(&self, lambda: &ParameterPoint) -> Option<(CMatrix, CMatrix)> {
        let (wm, wp) = match self.inner.frame_gauge(lambda) {
            Some((a, b)) => (a * &self.w_minus, b * &self.w_plus),
            None => (self.w_minus.clone(), self.w_plus.clone()),
        };
        Some((wm, wp))
    }
}
