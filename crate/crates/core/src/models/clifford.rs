//! Four-band models built on the five anticommuting gamma matrices.
//!
//! `H(lambda) = R(lambda) [sum_a d_a(lambda) G_a] R(lambda)^dagger` with
//!
//! ```text
//! d_a(lambda) = offset_a + sum_i c[a][i] sin(lambda_i) + sum_i e[a][i] cos(lambda_i)
//! R(lambda)   = T_1 T_2 ... T_M,   T_i = exp(-i tau lambda_i (u_i . G)),  |u_i| = 1
//! ```
//!
//! Since `(d.G)^2 = |d|^2`, the spectrum is exactly `{-|d|, +|d|}`, each twofold. The
//! twist `R` leaves the spectrum alone but moves the bands off the quaternionic family
//! spanned by `d.G`: without it, `Q_jj` is proportional to the identity for every `j`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gamma::{gamma_combination, gamma_matrices};
use super::{finite_setting, HamiltonianModel, ParameterPoint};
use crate::error::{Error, Result};
use crate::numerics::linalg::{c, r, CMatrix, I};
use crate::numerics::HermitianMatrix;

pub const GENERIC_SEED: u64 = 7;
pub const GENERIC_MASS: f64 = 2.5;
pub const GENERIC_TWIST: f64 = 0.6;
pub const WEYL_TWIST: f64 = 0.4;
/// Working point of `dirac4_generic` used by the examples and the acceptance suite.
pub const GENERIC_REFERENCE: [f64; 4] = [0.7, 0.3, 1.1, -0.4];
/// Working point of `weyl4` far from its gap closing at the origin.
pub const WEYL_REFERENCE: [f64; 2] = [1.6, -1.2];

#[derive(Debug, Clone)]
pub struct CliffordModel {
    name: String,
    offset: [f64; 5],
    sin_coeffs: Vec<[f64; 5]>,
    cos_coeffs: Vec<[f64; 5]>,
    twist: f64,
    twist_axes: Vec<[f64; 5]>,
    gammas: [CMatrix; 5],
}

fn unit_axes(rng: &mut ChaCha8Rng, count: usize) -> Vec<[f64; 5]> {
    (0..count)
        .map(|_| {
            let mut v = [0.0; 5];
            for x in v.iter_mut() {
                *x = rng.random_range(-1.0..1.0);
            }
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / n)
        })
        .collect()
}

impl CliffordModel {
    fn build(
        name: &str,
        offset: [f64; 5],
        sin_coeffs: Vec<[f64; 5]>,
        cos_coeffs: Vec<[f64; 5]>,
        twist: f64,
        seed: u64,
    ) -> Result<Self> {
        finite_setting("twist", twist)?;
        let all = offset.iter().chain(sin_coeffs.iter().flatten()).chain(cos_coeffs.iter().flatten());
        if all.clone().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSetting { key: "c/e".into(), reason: "coefficients must be finite".into() });
        }
        // Twist axes come from their own stream so that they do not shift when coefficient
        // tables are supplied explicitly.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7769_7374);
        let twist_axes = unit_axes(&mut rng, sin_coeffs.len());
        Ok(Self {
            name: name.to_string(),
            offset,
            sin_coeffs,
            cos_coeffs,
            twist,
            twist_axes,
            gammas: gamma_matrices(),
        })
    }

    /// `d = (sin l1, sin l2, sin l3, sin l4, m + sum_i cos l_i)`.
    pub fn dirac4(mass: f64) -> Result<Self> {
        let mass = finite_setting("mass", mass)?;
        let sin_coeffs = (0..4)
            .map(|i| {
                let mut v = [0.0; 5];
                v[i] = 1.0;
                v
            })
            .collect();
        let cos_coeffs = vec![[0.0, 0.0, 0.0, 0.0, 1.0]; 4];
        Self::build("dirac4", [0.0, 0.0, 0.0, 0.0, mass], sin_coeffs, cos_coeffs, 0.0, 0)
    }

    /// Coefficients `c`, `e` drawn uniformly from `[-1, 1)` with ChaCha8 seeded by `seed`
    /// (row-major over `a`, then `i`; all of `c` before `e`), mass on `d_5`, twisted.
    pub fn dirac4_generic(mass: f64, seed: u64, twist: f64) -> Result<Self> {
        let mass = finite_setting("mass", mass)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let table = |rng: &mut ChaCha8Rng| {
            let mut t = vec![[0.0; 5]; 4];
            for a in 0..5 {
                for row in t.iter_mut() {
                    row[a] = rng.random_range(-1.0..1.0);
                }
            }
            t
        };
        let sin_coeffs = table(&mut rng);
        let cos_coeffs = table(&mut rng);
        Self::build("dirac4_generic", [0.0, 0.0, 0.0, 0.0, mass], sin_coeffs, cos_coeffs, twist, seed)
    }

    /// Two-parameter model with a gap closing at `lambda = 0` when `mass = 0`:
    /// `d = (sin l1, sin l2, 0, 0, mass + cos l1 + cos l2 - 2)`, so `|d| ~ |lambda|` nearby.
    pub fn weyl4(mass: f64, twist: f64, seed: u64) -> Result<Self> {
        let mass = finite_setting("mass", mass)?;
        let sin_coeffs = vec![[1.0, 0.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0, 0.0]];
        let cos_coeffs = vec![[0.0, 0.0, 0.0, 0.0, 1.0]; 2];
        Self::build("weyl4", [0.0, 0.0, 0.0, 0.0, mass - 2.0], sin_coeffs, cos_coeffs, twist, seed)
    }

    /// Explicit coefficient tables `c[a][i]`, `e[a][i]` with `a` over the five gamma matrices.
    pub fn from_tables(name: &str, mass: f64, c: &[Vec<f64>], e: &[Vec<f64>], twist: f64, seed: u64) -> Result<Self> {
        let mass = finite_setting("mass", mass)?;
        let transpose = |key: &str, t: &[Vec<f64>]| -> Result<Vec<[f64; 5]>> {
            if t.len() != 5 {
                return Err(Error::InvalidSetting { key: key.into(), reason: format!("need 5 rows, got {}", t.len()) });
            }
            let m = t[0].len();
            if m == 0 || t.iter().any(|row| row.len() != m) {
                return Err(Error::InvalidSetting { key: key.into(), reason: "rows must have equal, non-zero length".into() });
            }
            Ok((0..m).map(|i| [t[0][i], t[1][i], t[2][i], t[3][i], t[4][i]]).collect())
        };
        let sin_coeffs = transpose("c", c)?;
        let cos_coeffs = transpose("e", e)?;
        if sin_coeffs.len() != cos_coeffs.len() {
            return Err(Error::InvalidSetting { key: "e".into(), reason: "c and e must have the same shape".into() });
        }
        Self::build(name, [0.0, 0.0, 0.0, 0.0, mass], sin_coeffs, cos_coeffs, twist, seed)
    }

    /// The vector `d(lambda)`.
    pub fn d_vector(&self, lambda: &ParameterPoint) -> [f64; 5] {
        let mut d = self.offset;
        for (i, &l) in lambda.values().iter().enumerate() {
            let (s, co) = l.sin_cos();
            for a in 0..5 {
                d[a] += self.sin_coeffs[i][a] * s + self.cos_coeffs[i][a] * co;
            }
        }
        d
    }

    fn d_derivative(&self, lambda: &ParameterPoint, j: usize) -> [f64; 5] {
        let (s, co) = lambda.values()[j].sin_cos();
        let mut v = [0.0; 5];
        for a in 0..5 {
            v[a] = self.sin_coeffs[j][a] * co - self.cos_coeffs[j][a] * s;
        }
        v
    }

    pub fn gammas(&self) -> &[CMatrix; 5] {
        &self.gammas
    }

    /// `T_i = cos(tau l_i) - i sin(tau l_i) (u_i . G)`.
    fn twist_factor(&self, i: usize, l: f64) -> CMatrix {
        let (s, co) = (self.twist * l).sin_cos();
        CMatrix::identity(4, 4) * r(co) - gamma_combination(&self.gammas, &self.twist_axes[i]) * c(0.0, s)
    }

    /// Prefix products `L_j = T_1 ... T_{j-1}` for `j = 0..=M`.
    fn twist_prefixes(&self, lambda: &ParameterPoint) -> Vec<CMatrix> {
        let mut out = Vec::with_capacity(lambda.len() + 1);
        let mut acc = CMatrix::identity(4, 4);
        out.push(acc.clone());
        for (i, &l) in lambda.values().iter().enumerate() {
            acc = acc * self.twist_factor(i, l);
            out.push(acc.clone());
        }
        out
    }
}

impl HamiltonianModel for CliffordModel {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        4
    }

    fn param_count(&self) -> usize {
        self.sin_coeffs.len()
    }

    fn evaluate(&self, lambda: &ParameterPoint) -> Result<HermitianMatrix> {
        self.check_point(lambda)?;
        let core = gamma_combination(&self.gammas, &self.d_vector(lambda));
        if self.twist == 0.0 {
            return Ok(HermitianMatrix::symmetrized(core));
        }
        let rot = self.twist_prefixes(lambda).pop().expect("non-empty prefixes");
        Ok(HermitianMatrix::symmetrized(&rot * core * rot.adjoint()))
    }

    fn gradient(&self, lambda: &ParameterPoint, j: usize) -> Result<HermitianMatrix> {
        self.check_point(lambda)?;
        self.check_index(j)?;
        let d_core = gamma_combination(&self.gammas, &self.d_derivative(lambda, j));
        if self.twist == 0.0 {
            return Ok(HermitianMatrix::symmetrized(d_core));
        }
        // dR/dl_j = -i tau K_j R with K_j = L_j (u_j . G) L_j^dagger, hence
        // dH/dl_j = -i tau [K_j, H] + R (dd/dl_j . G) R^dagger.
        let prefixes = self.twist_prefixes(lambda);
        let rot = &prefixes[lambda.len()];
        let lj = &prefixes[j];
        let k = lj * gamma_combination(&self.gammas, &self.twist_axes[j]) * lj.adjoint();
        let h = rot * gamma_combination(&self.gammas, &self.d_vector(lambda)) * rot.adjoint();
        let comm = &k * &h - &h * &k;
        let grad = comm * (-I * r(self.twist)) + rot * d_core * rot.adjoint();
        Ok(HermitianMatrix::symmetrized(grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{decompose_bands, gradient_fd};
    use crate::numerics::hermitian_eig;
    use crate::numerics::linalg::max_diff;
    use crate::Error;

    #[test]
    fn dirac4_spectrum_is_plus_minus_norm_d() {
        let m = CliffordModel::dirac4(1.0).unwrap();
        for lambda in [[0.7, 0.3, 1.1, -0.4], [2.0, -1.0, 0.5, 3.0], [0.1, 0.2, 0.3, 0.4]] {
            let p: ParameterPoint = lambda.into();
            let d = m.d_vector(&p);
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let e = hermitian_eig(&m.evaluate(&p).unwrap()).unwrap();
            let expected = [-norm, -norm, norm, norm];
            for (x, y) in e.values.iter().zip(expected) {
                assert!((x - y).abs() <= 1e-10 * norm);
            }
        }
    }

    #[test]
    fn dirac4_unit_norm_bands() {
        // l = (pi, pi, pi, 0): all sines vanish and d5 = 1 - 1 - 1 - 1 + 1 = -1, so |d| = 1.
        let m = CliffordModel::dirac4(1.0).unwrap();
        let pi = std::f64::consts::PI;
        let b = decompose_bands(&m, &[pi, pi, pi, 0.0].into(), None).unwrap();
        assert!((b.energy_minus + 1.0).abs() < 1e-12);
        assert!((b.energy_plus - 1.0).abs() < 1e-12);
        assert_eq!(b.degeneracy(), 2);
    }

    #[test]
    fn dirac_point_collapses_gap() {
        let m = CliffordModel::dirac4(2.0).unwrap();
        let pi = std::f64::consts::PI;
        let err = decompose_bands(&m, &[pi, pi, pi, 0.0].into(), None).unwrap_err();
        assert!(matches!(err, Error::GapCollapse { .. }));
    }

    #[test]
    fn twisted_gradient_matches_finite_difference() {
        let m = CliffordModel::dirac4_generic(GENERIC_MASS, GENERIC_SEED, GENERIC_TWIST).unwrap();
        let p: ParameterPoint = [0.7, 0.3, 1.1, -0.4].into();
        for j in 0..4 {
            let a = m.gradient(&p, j).unwrap();
            let f = gradient_fd(&m, &p, j, 1e-5).unwrap();
            assert!(max_diff(a.matrix(), f.matrix()) <= 1e-6 * a.max_abs());
        }
    }

    #[test]
    fn weyl4_gap_closes_at_origin() {
        let m = CliffordModel::weyl4(0.0, WEYL_TWIST, GENERIC_SEED).unwrap();
        assert!(matches!(decompose_bands(&m, &[0.0, 0.0].into(), None), Err(Error::GapCollapse { .. })));
        let b = decompose_bands(&m, &[0.05, 0.0].into(), None).unwrap();
        assert!((b.gap() - 2.0 * m.d_vector(&[0.05, 0.0].into()).iter().map(|x| x * x).sum::<f64>().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn table_shape_is_validated() {
        let c = vec![vec![1.0, 0.0]; 4];
        let e = vec![vec![0.0, 1.0]; 5];
        assert!(matches!(
            CliffordModel::from_tables("x", 0.0, &c, &e, 0.0, 0),
            Err(Error::InvalidSetting { .. })
        ));
    }
}
