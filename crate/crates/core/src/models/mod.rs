//! Parametric Hamiltonians `H(lambda)` with an exact two-band degenerate spectrum.

pub mod clifford;
pub mod gamma;
pub mod gauge;
pub mod pairs;
pub mod spin_half;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{canonical_frame, hermitian_eig, max_diff, orthonormality_defect, r, CMatrix};
use crate::numerics::HermitianMatrix;

pub use clifford::CliffordModel;
pub use gauge::{random_unitary, Regauged};
pub use pairs::PairsModel;
pub use spin_half::SpinHalf;

/// Default central-difference step for numerical gradients.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Default band grouping tolerance relative to `max|H|`.
pub const GROUPING_RTOL: f64 = 1e-8;

/// Absolute lower bound of the default grouping tolerance (energy units), so that a
/// vanishing Hamiltonian still counts as gapless.
pub const GROUPING_ATOL: f64 = 1e-12;

/// A point `lambda = (lambda_1, ..., lambda_M)` in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterPoint(Vec<f64>);

impl ParameterPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSetting { key: format!("lambda[{i}]"), reason: "not finite".into() });
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `lambda + h e_j`.
    pub fn shifted(&self, j: usize, h: f64) -> Self {
        let mut v = self.0.clone();
        v[j] += h;
        Self(v)
    }
}

impl From<&[f64]> for ParameterPoint {
    fn from(v: &[f64]) -> Self {
        Self::new(v.to_vec()).expect("finite parameter values")
    }
}

impl<const M: usize> From<[f64; M]> for ParameterPoint {
    fn from(v: [f64; M]) -> Self {
        Self::new(v.to_vec()).expect("finite parameter values")
    }
}

/// A parametric Hamiltonian `lambda -> H(lambda)` on a `dim`-dimensional space.
pub trait HamiltonianModel: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn param_count(&self) -> usize;

    /// Degeneracy `N` of each band; `dim = 2 N` for two-band models.
    fn degeneracy(&self) -> usize {
        self.dim() / 2
    }

    fn evaluate(&self, lambda: &ParameterPoint) -> Result<HermitianMatrix>;

    /// `dH/dlambda_j`. Defaults to a central difference with step [`DEFAULT_FD_STEP`].
    fn gradient(&self, lambda: &ParameterPoint, j: usize) -> Result<HermitianMatrix> {
        gradient_fd(self, lambda, j, DEFAULT_FD_STEP)
    }

    /// Unitaries applied to the eigensolver frames, `frame_minus W-` and `frame_plus W+`. Physical
    /// results must not depend on this choice.
    fn frame_gauge(&self, _lambda: &ParameterPoint) -> Option<(CMatrix, CMatrix)> {
        None
    }

    fn check_point(&self, lambda: &ParameterPoint) -> Result<()> {
        if lambda.len() != self.param_count() {
            return Err(Error::DimensionMismatch { expected: self.param_count(), got: lambda.len() });
        }
        Ok(())
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.param_count() {
            return Err(Error::IndexOutOfRange { index: j, limit: self.param_count() });
        }
        Ok(())
    }
}

impl<M: HamiltonianModel + ?Sized> HamiltonianModel for Box<M> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn param_count(&self) -> usize {
        (**self).param_count()
    }

    fn degeneracy(&self) -> usize {
        (**self).degeneracy()
    }

    fn evaluate(&self, lambda: &ParameterPoint) -> Result<HermitianMatrix> {
        (**self).evaluate(lambda)
    }

    fn gradient(&self, lambda: &ParameterPoint, j: usize) -> Result<HermitianMatrix> {
        (**self).gradient(lambda, j)
    }

    fn frame_gauge(&self, lambda: &ParameterPoint) -> Option<(CMatrix, CMatrix)> {
        (**self).frame_gauge(lambda)
    }
}

/// Central difference `(H(lambda + h e_j) - H(lambda - h e_j)) / 2h`, symmetrized.
pub fn gradient_fd<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    j: usize,
    h: f64,
) -> Result<HermitianMatrix> {
    model.check_index(j)?;
    if !(1e-8..=1e-2).contains(&h) {
        return Err(Error::InvalidArgument(format!("finite-difference step {h:e} outside [1e-8, 1e-2]")));
    }
    let plus = model.evaluate(&lambda.shifted(j, h))?;
    let minus = model.evaluate(&lambda.shifted(j, -h))?;
    let diff = (plus.matrix() - minus.matrix()) * r(0.5 / h);
    Ok(HermitianMatrix::symmetrized(diff))
}

/// Band sign `sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Minus,
    Plus,
}

impl Band {
    pub fn sign(self) -> f64 {
        match self {
            Band::Minus => -1.0,
            Band::Plus => 1.0,
        }
    }

    pub fn other(self) -> Band {
        match self {
            Band::Minus => Band::Plus,
            Band::Plus => Band::Minus,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Band::Minus => "minus",
            Band::Plus => "plus",
        })
    }
}

/// Two degenerate bands `E- < E+` with orthonormal frames (`dim x N` each).
#[derive(Debug, Clone)]
pub struct BandDecomposition {
    pub energy_minus: f64,
    pub energy_plus: f64,
    pub frame_minus: CMatrix,
    pub frame_plus: CMatrix,
    pub grouping_tol: f64,
}

impl BandDecomposition {
    pub fn gap(&self) -> f64 {
        self.energy_plus - self.energy_minus
    }

    pub fn degeneracy(&self) -> usize {
        self.frame_minus.ncols()
    }

    pub fn dim(&self) -> usize {
        self.frame_minus.nrows()
    }

    pub fn energy(&self, band: Band) -> f64 {
        match band {
            Band::Minus => self.energy_minus,
            Band::Plus => self.energy_plus,
        }
    }

    pub fn frame(&self, band: Band) -> &CMatrix {
        match band {
            Band::Minus => &self.frame_minus,
            Band::Plus => &self.frame_plus,
        }
    }

    /// `[frame_minus | frame_plus]`, a unitary `dim x dim` matrix.
    pub fn basis(&self) -> CMatrix {
        let n = self.degeneracy();
        let mut b = CMatrix::zeros(self.dim(), 2 * n);
        b.columns_mut(0, n).copy_from(&self.frame_minus);
        b.columns_mut(n, n).copy_from(&self.frame_plus);
        b
    }

    /// Projector onto one band.
    pub fn projector(&self, band: Band) -> CMatrix {
        let f = self.frame(band);
        f * f.adjoint()
    }

    /// Same bands in a different gauge: `frame_minus W-`, `frame_plus W+`.
    pub fn regauged(&self, w_minus: &CMatrix, w_plus: &CMatrix) -> Self {
        Self { frame_minus: &self.frame_minus * w_minus, frame_plus: &self.frame_plus * w_plus, ..self.clone() }
    }

    /// Largest violation of orthonormality and of `H F = E F` over both frames.
    pub fn residual(&self, h: &HermitianMatrix) -> (f64, f64) {
        let ortho = orthonormality_defect(&self.frame_minus).max(orthonormality_defect(&self.frame_plus));
        let eig = [Band::Minus, Band::Plus]
            .iter()
            .map(|&b| max_diff(&(h.matrix() * self.frame(b)), &(self.frame(b) * r(self.energy(b)))))
            .fold(0.0_f64, f64::max);
        (ortho, eig)
    }
}

/// Splits the spectrum of `H(lambda)` into two bands of `N = dim / 2` states each.
///
/// `grouping_tol` defaults to `max(1e-8 max|H|, 1e-12)`; the within-band spread must not exceed it and the
/// gap must exceed ten times it.
pub fn decompose_bands<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    grouping_tol: Option<f64>,
) -> Result<BandDecomposition> {
    let h = model.evaluate(lambda)?;
    let bands = decompose_hamiltonian(&h, grouping_tol)?;
    Ok(match model.frame_gauge(lambda) {
        Some((wm, wp)) => bands.regauged(&wm, &wp),
        None => bands,
    })
}

/// [`decompose_bands`] for an explicit Hamiltonian.
pub fn decompose_hamiltonian(h: &HermitianMatrix, grouping_tol: Option<f64>) -> Result<BandDecomposition> {
    let dim = h.dim();
    let tol = grouping_tol.unwrap_or((GROUPING_RTOL * h.max_abs()).max(GROUPING_ATOL));
    let eig = hermitian_eig(h)?;
    let clusters = crate::numerics::linalg::cluster_ranges(&eig.values, tol);
    if dim % 2 != 0 {
        return Err(Error::NotTwoBand { sizes: clusters.iter().map(|c| c.len()).collect() });
    }
    let n = dim / 2;
    let lower = &eig.values[..n];
    let upper = &eig.values[n..];
    let gap = upper[0] - lower[n - 1];
    if gap <= 10.0 * tol {
        return Err(Error::GapCollapse { gap, threshold: 10.0 * tol });
    }
    let spread = |v: &[f64]| v[v.len() - 1] - v[0];
    if spread(lower) > tol || spread(upper) > tol {
        return Err(Error::NotTwoBand { sizes: clusters.iter().map(|c| c.len()).collect() });
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(BandDecomposition {
        energy_minus: mean(lower),
        energy_plus: mean(upper),
        frame_minus: canonical_frame(&eig.vectors.columns(0, n).into_owned()),
        frame_plus: canonical_frame(&eig.vectors.columns(n, n).into_owned()),
        grouping_tol: tol,
    })
}

/// Model construction settings. Which keys apply depends on the model; supplying a key the
/// model does not use is an error.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSettings {
    /// Mass term of the Dirac models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    /// Level splitting of `spin_half`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Seed for pseudo-random coefficients (`dirac4_generic`, `pairs`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coeff_seed: Option<u64>,
    /// Explicit sine coefficients `c[a][i]` (5 x M) for Dirac-type models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<Vec<f64>>>,
    /// Explicit cosine coefficients `e[a][i]` (5 x M) for Dirac-type models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<Vec<f64>>>,
    /// Strength of the parameter-dependent basis twist (Dirac-type models).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub twist: Option<f64>,
    /// Band gap of the `pairs` model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    /// Prescribed QGT eigenvalues of the first `pairs` generator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    /// Prescribed QGT eigenvalues of a second, commuting `pairs` generator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_second: Option<Vec<f64>>,
    /// Degeneracy of a seeded generic `pairs` model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degeneracy: Option<usize>,
    /// Parameter count of a seeded generic `pairs` model.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<usize>,
}

impl ModelSettings {
    fn reject_unused(&self, model: &str, allowed: &[&str]) -> Result<()> {
        let present = [
            ("mass", self.mass.is_some()),
            ("delta", self.delta.is_some()),
            ("coeff_seed", self.coeff_seed.is_some()),
            ("c", self.c.is_some()),
            ("e", self.e.is_some()),
            ("twist", self.twist.is_some()),
            ("gap", self.gap.is_some()),
            ("q", self.q.is_some()),
            ("q_second", self.q_second.is_some()),
            ("degeneracy", self.degeneracy.is_some()),
            ("params", self.params.is_some()),
        ];
        for (key, set) in present {
            if set && !allowed.contains(&key) {
                return Err(Error::InvalidSetting { key: key.into(), reason: format!("not used by model `{model}`") });
            }
        }
        Ok(())
    }
}

pub(crate) fn finite_setting(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidSetting { key: key.into(), reason: "not finite".into() })
    }
}

pub const BUILTIN_MODELS: [&str; 6] = ["spin_half", "dirac4", "dirac4_generic", "weyl4", "dirac4_custom", "pairs"];

/// Constructs one of the builtin models by name.
pub fn builtin_model(name: &str, settings: &ModelSettings) -> Result<Box<dyn HamiltonianModel>> {
    match name {
        "spin_half" => {
            settings.reject_unused(name, &["delta"])?;
            Ok(Box::new(SpinHalf::new(settings.delta.unwrap_or(1.0))?))
        }
        "dirac4" => {
            settings.reject_unused(name, &["mass"])?;
            Ok(Box::new(CliffordModel::dirac4(settings.mass.unwrap_or(1.0))?))
        }
        "dirac4_generic" => {
            settings.reject_unused(name, &["mass", "coeff_seed", "twist"])?;
            Ok(Box::new(CliffordModel::dirac4_generic(
                settings.mass.unwrap_or(clifford::GENERIC_MASS),
                settings.coeff_seed.unwrap_or(clifford::GENERIC_SEED),
                settings.twist.unwrap_or(clifford::GENERIC_TWIST),
            )?))
        }
        "weyl4" => {
            settings.reject_unused(name, &["mass", "twist", "coeff_seed"])?;
            Ok(Box::new(CliffordModel::weyl4(
                settings.mass.unwrap_or(0.0),
                settings.twist.unwrap_or(clifford::WEYL_TWIST),
                settings.coeff_seed.unwrap_or(clifford::GENERIC_SEED),
            )?))
        }
        "dirac4_custom" => {
            settings.reject_unused(name, &["mass", "c", "e", "twist", "coeff_seed"])?;
            let c = settings.c.as_ref().ok_or_else(|| Error::InvalidSetting {
                key: "c".into(),
                reason: "required by dirac4_custom".into(),
            })?;
            let e = settings.e.as_ref().ok_or_else(|| Error::InvalidSetting {
                key: "e".into(),
                reason: "required by dirac4_custom".into(),
            })?;
            Ok(Box::new(CliffordModel::from_tables(
                "dirac4_custom",
                settings.mass.unwrap_or(0.0),
                c,
                e,
                settings.twist.unwrap_or(0.0),
                settings.coeff_seed.unwrap_or(clifford::GENERIC_SEED),
            )?))
        }
        "pairs" => {
            settings.reject_unused(name, &["gap", "q", "q_second", "coeff_seed", "degeneracy", "params"])?;
            let gap = settings.gap.unwrap_or(2.0);
            match (&settings.q, settings.coeff_seed) {
                (Some(q), None) => {
                    if settings.degeneracy.is_some() || settings.params.is_some() {
                        return Err(Error::InvalidSetting {
                            key: "degeneracy".into(),
                            reason: "only used with coeff_seed".into(),
                        });
                    }
                    Ok(Box::new(PairsModel::prescribed(gap, q, settings.q_second.as_deref())?))
                }
                (None, Some(seed)) => {
                    if settings.q_second.is_some() {
                        return Err(Error::InvalidSetting { key: "q_second".into(), reason: "requires q".into() });
                    }
                    Ok(Box::new(PairsModel::seeded(
                        gap,
                        settings.degeneracy.unwrap_or(2),
                        settings.params.unwrap_or(2),
                        seed,
                    )?))
                }
                _ => Err(Error::InvalidSetting {
                    key: "q".into(),
                    reason: "pairs needs exactly one of `q` or `coeff_seed`".into(),
                }),
            }
        }
        other => Err(Error::UnknownModel(other.to_string())),
    }
}

/// A parameter-independent Hamiltonian; every geometric quantity vanishes.
#[derive(Debug, Clone)]
pub struct ConstantModel {
    h: HermitianMatrix,
    params: usize,
}

impl ConstantModel {
    pub fn new(h: HermitianMatrix, params: usize) -> Self {
        Self { h, params }
    }

    /// `diag(-1, .., -1, +1, .., +1)` with `n` states per band.
    pub fn split(n: usize, params: usize) -> Self {
        let diag: Vec<f64> = (0..2 * n).map(|i| if i < n { -1.0 } else { 1.0 }).collect();
        Self::new(HermitianMatrix::from_diagonal(&diag), params)
    }
}

impl HamiltonianModel for ConstantModel {
    fn name(&self) -> &str {
        "constant"
    }

    fn dim(&self) -> usize {
        self.h.dim()
    }

    fn param_count(&self) -> usize {
        self.params
    }

    fn evaluate(&self, lambda: &ParameterPoint) -> Result<HermitianMatrix> {
        self.check_point(lambda)?;
        Ok(self.h.clone())
    }

    fn gradient(&self, lambda: &ParameterPoint, j: usize) -> Result<HermitianMatrix> {
        self.check_point(lambda)?;
        self.check_index(j)?;
        Ok(HermitianMatrix::zeros(self.dim()))
    }
}
