//! Non-Abelian quantum geometric tensor of a degenerate two-band Hamiltonian.
//!
//! With band frames `F-`, `F+` and the inter-band blocks `C_j = F-^dagger dH/dl_j F+`,
//!
//! ```text
//! Q^-_jk = C_j C_k^dagger / gap^2        Q^+_jk = C_j^dagger C_k / gap^2
//! ```
//!
//! which is the resolvent form of `<d_j psi_nu| (1 - P) |d_k psi_mu>`. The literal frame-derivative
//! form lives in [`oracle`] and is used only to cross-check.

pub mod oracle;

use std::fmt;

use serde::Serialize;

pub use oracle::{qgt_fd, DEFAULT_ORACLE_STEP};

use crate::error::{Error, Result};
use crate::models::{decompose_bands, Band, BandDecomposition, HamiltonianModel, ParameterPoint};
use crate::numerics::linalg::{c, canonical_frame, hermitian_defect, max_abs, max_diff, r, CMatrix, I};
use crate::numerics::{hermitian_eig, HermitianMatrix};

/// Relative anti-Hermitian part tolerated before a matrix is treated as non-Hermitian.
pub const HERMITICITY_RTOL: f64 = 1e-10;

/// One band block `[Q^sigma_jk]_{nu mu}` in the gauge of the band frame it was computed in.
#[derive(Debug, Clone, PartialEq)]
pub struct QGTensor {
    pub band: Band,
    pub j: usize,
    pub k: usize,
    pub matrix: CMatrix,
}

impl QGTensor {
    pub fn degeneracy(&self) -> usize {
        self.matrix.nrows()
    }

    /// `Q_kj = Q_jk^dagger`.
    pub fn swapped(&self) -> QGTensor {
        QGTensor { band: self.band, j: self.k, k: self.j, matrix: self.matrix.adjoint() }
    }
}

/// `g = (Q + Q^dagger) / 2`.
pub fn metric(q: &QGTensor) -> HermitianMatrix {
    HermitianMatrix::symmetrized((&q.matrix + q.matrix.adjoint()) * r(0.5))
}

/// `F = i (Q - Q^dagger)`.
pub fn curvature(q: &QGTensor) -> HermitianMatrix {
    HermitianMatrix::symmetrized((&q.matrix - q.matrix.adjoint()) * I)
}

/// Which drive combination a [`CouplingOperator`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coupling {
    Single { j: usize },
    TwoTone { j: usize, k: usize, phase: f64 },
}

impl Coupling {
    pub fn indices(&self) -> (usize, Option<usize>) {
        match *self {
            Coupling::Single { j } => (j, None),
            Coupling::TwoTone { j, k, .. } => (j, Some(k)),
        }
    }
}

impl fmt::Display for Coupling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coupling::Single { j } => write!(f, "Q_{j}{j}"),
            Coupling::TwoTone { j, k, phase } => write!(f, "Q_{j}{j} + Q_{k}{k} + two-tone cross terms (phase {phase})"),
        }
    }
}

/// The `N x N` operator whose eigenvalues, times `A^2`, are the squared Rabi frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperator {
    pub band: Band,
    pub coupling: Coupling,
    pub matrix: CMatrix,
}

/// Eigen-decomposition of a Hermitian QGT combination.
#[derive(Debug, Clone, PartialEq)]
pub struct QGTEigenbasis {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `U~`: row `nu` holds the conjugated band-frame coordinates of `|psi~_nu>`.
    pub transform: CMatrix,
    /// Columns `|psi~_nu>` in the Hilbert space.
    pub rotated_frame: CMatrix,
}

/// Diagonalizes a Hermitian `N x N` QGT combination expressed in `frame` (`D x N`).
///
/// Eigenvalues are descending; degenerate clusters get the canonical pivoted basis and every
/// eigenvector has its largest coordinate real positive, so `q I` yields the identity transform.
pub fn diagonalize_qgt(q: &CMatrix, frame: &CMatrix) -> Result<QGTEigenbasis> {
    let n = q.nrows();
    if q.ncols() != n || frame.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: frame.ncols().min(q.ncols()) });
    }
    let scale = max_abs(q);
    let asymmetry = hermitian_defect(q);
    if asymmetry > HERMITICITY_RTOL * scale.max(f64::MIN_POSITIVE) && asymmetry > 1e-300 {
        return Err(Error::NotHermitian { asymmetry, scale });
    }
    let eig = crate::numerics::linalg::hermitian_eig_descending(&HermitianMatrix::symmetrized(q.clone()))?;
    Ok(QGTEigenbasis {
        eigenvalues: eig.values,
        transform: eig.vectors.adjoint(),
        rotated_frame: frame * &eig.vectors,
    })
}

/// Band decomposition and parameter gradients at one point, from which every QGT block follows.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub lambda: ParameterPoint,
    pub bands: BandDecomposition,
    /// `dH/dl_j` for every parameter.
    pub gradients: Vec<HermitianMatrix>,
}

impl LocalGeometry {
    pub fn new<M: HamiltonianModel + ?Sized>(model: &M, lambda: &ParameterPoint) -> Result<Self> {
        let bands = decompose_bands(model, lambda, None)?;
        let gradients = (0..model.param_count()).map(|j| model.gradient(lambda, j)).collect::<Result<_>>()?;
        Ok(Self { lambda: lambda.clone(), bands, gradients })
    }

    /// Same point in a different band gauge.
    pub fn regauged(&self, w_minus: &CMatrix, w_plus: &CMatrix) -> Self {
        Self { bands: self.bands.regauged(w_minus, w_plus), ..self.clone() }
    }

    pub fn param_count(&self) -> usize {
        self.gradients.len()
    }

    pub fn degeneracy(&self) -> usize {
        self.bands.degeneracy()
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.param_count() {
            return Err(Error::IndexOutOfRange { index: j, limit: self.param_count() });
        }
        Ok(())
    }

    /// `C_j = F-^dagger dH/dl_j F+`.
    pub fn interband(&self, j: usize) -> Result<CMatrix> {
        self.check_index(j)?;
        Ok(self.bands.frame_minus.adjoint() * self.gradients[j].matrix() * &self.bands.frame_plus)
    }

    /// Drive block `M` with `coupling operator (minus band) = M M^dagger / gap^2`:
    /// `C_j` for a single tone, `C_j + e^{i phase} C_k` for two tones.
    pub fn drive_block(&self, coupling: Coupling) -> Result<CMatrix> {
        match coupling {
            Coupling::Single { j } => self.interband(j),
            Coupling::TwoTone { j, k, phase } => {
                if j == k {
                    return Err(Error::InvalidArgument(format!("two-tone drive needs distinct indices, got {j} twice")));
                }
                Ok(self.interband(j)? + self.interband(k)? * c(phase.cos(), phase.sin()))
            }
        }
    }

    pub fn qgt(&self, band: Band, j: usize, k: usize) -> Result<QGTensor> {
        let (cj, ck) = (self.interband(j)?, self.interband(k)?);
        let inv = r(1.0 / self.bands.gap().powi(2));
        let matrix = match band {
            Band::Minus => &cj * ck.adjoint() * inv,
            Band::Plus => cj.adjoint() * &ck * inv,
        };
        Ok(QGTensor { band, j, k, matrix })
    }

    pub fn coupling_operator(&self, band: Band, coupling: Coupling) -> Result<CouplingOperator> {
        let matrix = match coupling {
            Coupling::Single { j } => self.qgt(band, j, j)?.matrix,
            Coupling::TwoTone { j, k, phase } => {
                if j == k {
                    return Err(Error::InvalidArgument(format!("two-tone drive needs distinct indices, got {j} twice")));
                }
                let s = band.sign() * phase;
                let e = c(s.cos(), s.sin());
                self.qgt(band, j, j)?.matrix
                    + self.qgt(band, k, k)?.matrix
                    + self.qgt(band, j, k)?.matrix * e
                    + self.qgt(band, k, j)?.matrix * e.conj()
            }
        };
        Ok(CouplingOperator { band, coupling, matrix })
    }

    pub fn diagonalize(&self, op: &CouplingOperator) -> Result<QGTEigenbasis> {
        diagonalize_qgt(&op.matrix, self.bands.frame(op.band))
    }

    /// Morris-Shore pairing of the two bands under `coupling`.
    pub fn paired_basis(&self, coupling: Coupling) -> Result<PairedBasis> {
        let block = self.drive_block(coupling)?;
        let gap = self.bands.gap();
        let op = self.coupling_operator(Band::Minus, coupling)?;
        let eig = self.diagonalize(&op)?;
        let n = self.degeneracy();
        let q: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
        let q_max = q.first().copied().unwrap_or(0.0);
        let dark_tol = 1e-12 * q_max.max(f64::MIN_POSITIVE);

        let minus_coords = eig.transform.adjoint();
        let mut plus_coords = CMatrix::zeros(n, n);
        let mut bright = 0;
        for nu in 0..n {
            if q[nu] <= dark_tol {
                break;
            }
            let v = block.adjoint() * minus_coords.column(nu) * r(1.0 / (gap * q[nu].sqrt()));
            plus_coords.set_column(nu, &v);
            bright += 1;
        }
        if bright < n {
            // Dark partners: a canonical basis of the complement of the bright partners.
            let bright_span = plus_coords.columns(0, bright).into_owned();
            let complement = CMatrix::identity(n, n) - &bright_span * bright_span.adjoint();
            let eig_c = hermitian_eig(&HermitianMatrix::symmetrized(complement))?;
            let dark = canonical_frame(&eig_c.vectors.columns(bright, n - bright).into_owned());
            plus_coords.columns_mut(bright, n - bright).copy_from(&dark);
        }
        Ok(PairedBasis {
            coupling,
            q,
            bright,
            minus: &self.bands.frame_minus * &minus_coords,
            plus: &self.bands.frame_plus * &plus_coords,
            minus_coords,
            plus_coords,
        })
    }
}

/// States `|psi~_nu^->`, `|psi~_nu^+>` such that the resonant drive only couples equal labels,
/// with real positive coupling `A sqrt(q_nu)`.
#[derive(Debug, Clone)]
pub struct PairedBasis {
    pub coupling: Coupling,
    /// Descending eigenvalues of the minus-band coupling operator.
    pub q: Vec<f64>,
    /// Number of pairs with nonzero coupling; the remaining labels are dark.
    pub bright: usize,
    /// `D x N` columns `|psi~_nu^->`.
    pub minus: CMatrix,
    /// `D x N` columns `|psi~_nu^+>`.
    pub plus: CMatrix,
    /// Same states in band-frame coordinates.
    pub minus_coords: CMatrix,
    pub plus_coords: CMatrix,
}

impl PairedBasis {
    pub fn degeneracy(&self) -> usize {
        self.q.len()
    }

    pub fn state(&self, band: Band, nu: usize) -> nalgebra::DVector<num_complex::Complex64> {
        match band {
            Band::Minus => self.minus.column(nu).into_owned(),
            Band::Plus => self.plus.column(nu).into_owned(),
        }
    }

    pub fn frame(&self, band: Band) -> &CMatrix {
        match band {
            Band::Minus => &self.minus,
            Band::Plus => &self.plus,
        }
    }
}

pub fn qgt_resolvent<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    band: Band,
    j: usize,
    k: usize,
) -> Result<QGTensor> {
    LocalGeometry::new(model, lambda)?.qgt(band, j, k)
}

pub fn coupling_operator<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    band: Band,
    coupling: Coupling,
) -> Result<CouplingOperator> {
    LocalGeometry::new(model, lambda)?.coupling_operator(band, coupling)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub j: usize,
    /// Largest deviation between the projector form and the factorized form, both bands.
    pub factorization_deviation: f64,
    /// Largest deviation between the descending eigenvalues of `Q^-_jj` and `Q^+_jj`.
    pub eigenvalue_deviation: f64,
    pub eigenvalues_minus: Vec<f64>,
    pub eigenvalues_plus: Vec<f64>,
}

impl ConsistencyReport {
    pub fn max_deviation(&self) -> f64 {
        self.factorization_deviation.max(self.eigenvalue_deviation)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_deviation() <= tol
    }
}

/// Checks `Q^-_jj = C C^dagger / gap^2`, `Q^+_jj = C^dagger C / gap^2` against the projector form
/// `F_s^dagger dH P_{-s} dH F_s / gap^2`, and that both bands share their eigenvalues.
pub fn factorized_consistency<M: HamiltonianModel + ?Sized>(
    model: &M,
    lambda: &ParameterPoint,
    j: usize,
) -> Result<ConsistencyReport> {
    let geo = LocalGeometry::new(model, lambda)?;
    let gap2 = geo.bands.gap().powi(2);
    let dh = geo.gradients.get(j).ok_or(Error::IndexOutOfRange { index: j, limit: geo.param_count() })?.matrix();
    let mut factorization_deviation = 0.0_f64;
    let mut spectra = Vec::new();
    for band in [Band::Minus, Band::Plus] {
        let f = geo.bands.frame(band);
        let projector = geo.bands.projector(band.other());
        let direct = f.adjoint() * dh * projector * dh * f * r(1.0 / gap2);
        let q = geo.qgt(band, j, j)?;
        factorization_deviation = factorization_deviation.max(max_diff(&direct, &q.matrix));
        spectra.push(diagonalize_qgt(&q.matrix, f)?.eigenvalues);
    }
    let eigenvalue_deviation = spectra[0].iter().zip(&spectra[1]).fold(0.0_f64, |a, (x, y)| a.max((x - y).abs()));
    let eigenvalues_plus = spectra.pop().unwrap_or_default();
    let eigenvalues_minus = spectra.pop().unwrap_or_default();
    Ok(ConsistencyReport { j, factorization_deviation, eigenvalue_deviation, eigenvalues_minus, eigenvalues_plus })
}
