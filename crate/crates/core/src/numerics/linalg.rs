//! Dense complex linear algebra used throughout the crate.
//!
//! Everything is built on `nalgebra` dynamic matrices. The eigensolver wrapper adds
//! ascending ordering and a reproducible gauge for degenerate eigenvalue clusters, which
//! the raw solver output does not provide.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative asymmetry below which a matrix is accepted (and symmetrized) as Hermitian.
pub const HERMITIAN_RTOL: f64 = 1e-12;

/// Relative eigenvalue spacing below which eigenvalues are treated as one degenerate cluster.
pub const CLUSTER_RTOL: f64 = 1e-9;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// `max |a - b|` entrywise.
pub fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter().zip(b.iter()).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).norm()))
}

/// `max |M - M^dagger|` entrywise.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |V^dagger V - 1|`, the column-orthonormality defect of a frame.
pub fn orthonormality_defect(v: &CMatrix) -> f64 {
    let g = v.adjoint() * v;
    max_diff(&g, &CMatrix::identity(v.ncols(), v.ncols()))
}

/// Complex vector from `(re, im)` pairs.
pub fn cvec(entries: &[(f64, f64)]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&(a, b)| c(a, b)))
}

/// A square complex matrix known to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Accepts `m` if it is Hermitian to `1e-12 * max|m|`, removing the residual asymmetry.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        let scale = max_abs(&m);
        let asymmetry = hermitian_defect(&m);
        if asymmetry > HERMITIAN_RTOL * scale {
            return Err(Error::NotHermitian { asymmetry, scale });
        }
        Ok(Self::symmetrized(m))
    }

    /// `(m + m^dagger) / 2`, unconditionally.
    pub fn symmetrized(m: CMatrix) -> Self {
        assert!(m.is_square(), "Hermitian part of a non-square matrix");
        let h = (&m + m.adjoint()) * r(0.5);
        HermitianMatrix(h)
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(CMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        HermitianMatrix(CMatrix::identity(dim, dim))
    }

    /// Real diagonal matrix.
    pub fn from_diagonal(values: &[f64]) -> Self {
        let d = DVector::from_iterator(values.len(), values.iter().map(|&x| r(x)));
        HermitianMatrix(CMatrix::from_diagonal(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &HermitianMatrix, s: f64) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &other.0 * r(s))
    }

    pub fn scaled(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix(&self.0 * r(s))
    }

    /// Unitary conjugation `U H U^dagger`.
    pub fn conjugated(&self, u: &CMatrix) -> HermitianMatrix {
        HermitianMatrix::symmetrized(u * &self.0 * u.adjoint())
    }
}

/// Eigenvalues ascending with column-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenSystem {
    /// Index ranges of numerically degenerate eigenvalue clusters.
    pub fn clusters(&self, tol: f64) -> Vec<std::ops::Range<usize>> {
        cluster_ranges(&self.values, tol)
    }
}

/// Consecutive runs of sorted `values` whose neighbour spacing is at most `tol`.
pub fn cluster_ranges(values: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || (values[i] - values[i - 1]).abs() > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Eigendecomposition of a Hermitian matrix with deterministic gauge.
///
/// Degenerate clusters are replaced by the pivoted orthonormalization of their spectral
/// projector, so the returned columns depend only on the eigenspace and not on the solver's
/// internal rotation. Every column is then phased so its largest entry is real positive.
pub fn hermitian_eig(h: &HermitianMatrix) -> Result<EigenSystem> {
    hermitian_eig_aligned(h, None)
}

/// As [`hermitian_eig`], but degenerate clusters are rotated to the closest frame (polar
/// alignment) of the matching columns of `reference`, when one is supplied.
pub fn hermitian_eig_aligned(h: &HermitianMatrix, reference: Option<&CMatrix>) -> Result<EigenSystem> {
    let dim = h.dim();
    let raw = h
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 0)
        .ok_or(Error::NonConvergence { dim })?;

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| raw.eigenvalues[a].total_cmp(&raw.eigenvalues[b]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&i| raw.eigenvalues[i]).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence { dim });
    }
    let mut vectors = CMatrix::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &raw.eigenvectors.column(src));
    }

    let tol = CLUSTER_RTOL * h.max_abs().max(f64::MIN_POSITIVE);
    for range in cluster_ranges(&values, tol) {
        let block = vectors.columns(range.start, range.len()).into_owned();
        let fixed = match reference {
            Some(rf) if rf.nrows() == dim && rf.ncols() == dim => {
                let target = rf.columns(range.start, range.len()).into_owned();
                align_frame(&block, &target).unwrap_or_else(|| canonical_frame(&block))
            }
            _ => canonical_frame(&block),
        };
        vectors.columns_mut(range.start, range.len()).copy_from(&fixed);
    }
    Ok(EigenSystem { values, vectors })
}

/// Eigendecomposition with eigenvalues sorted descending (same gauge rules). Columns inside a
/// degenerate cluster keep the canonical order of [`hermitian_eig`].
pub fn hermitian_eig_descending(h: &HermitianMatrix) -> Result<EigenSystem> {
    let mut eig = hermitian_eig(&h.scaled(-1.0))?;
    for v in &mut eig.values {
        *v = -*v;
    }
    Ok(eig)
}

/// Deterministic orthonormal basis of the column span of `frame`.
///
/// Builds the projector `P = F F^dagger` and runs Gram-Schmidt over its columns, always picking
/// the residual column of largest norm (lowest index on ties). The result depends only on the
/// spanned subspace.
pub fn canonical_frame(frame: &CMatrix) -> CMatrix {
    let (dim, k) = frame.shape();
    let mut residual = frame * frame.adjoint();
    let mut out = CMatrix::zeros(dim, k);
    for slot in 0..k {
        let norms: Vec<f64> = (0..dim).map(|j| residual.column(j).norm()).collect();
        let best = norms.iter().cloned().fold(0.0_f64, f64::max);
        let pivot = norms.iter().position(|&n| n >= best * (1.0 - 1e-9)).unwrap_or(0);
        let v = residual.column(pivot).into_owned() / r(norms[pivot].max(f64::MIN_POSITIVE));
        let v = fix_phase(v);
        // Remove the new direction from every remaining column.
        let proj = v.adjoint() * &residual;
        residual -= &v * proj;
        out.set_column(slot, &v);
    }
    out
}

/// Polar alignment: the frame `F U` (U unitary) closest to `target`. `None` if the overlap is
/// rank deficient.
pub fn align_frame(frame: &CMatrix, target: &CMatrix) -> Option<CMatrix> {
    let overlap = frame.adjoint() * target;
    let (u, smin) = polar_unitary(&overlap)?;
    if smin < 1e-6 {
        return None;
    }
    Some(frame * u)
}

/// Unitary factor `W` of the polar decomposition `S = W P`, plus the smallest singular value.
pub fn polar_unitary(s: &CMatrix) -> Option<(CMatrix, f64)> {
    let svd = s.clone().try_svd(true, true, f64::EPSILON, 0)?;
    let u = svd.u?;
    let v_t = svd.v_t?;
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    Some((u * v_t, smin))
}

/// Multiplies `v` by the phase that makes its largest-modulus entry real and positive.
pub fn fix_phase(mut v: CVector) -> CVector {
    let best = v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if best == 0.0 {
        return v;
    }
    let pivot = v.iter().position(|z| z.norm() >= best * (1.0 - 1e-9)).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    v *= phase;
    v[pivot] = r(v[pivot].re);
    v
}

/// Matrix function `f(H) = V f(Λ) V^dagger` for Hermitian `H`.
pub fn hermitian_function(h: &HermitianMatrix, f: impl Fn(f64) -> Complex64) -> Result<CMatrix> {
    let eig = hermitian_eig(h)?;
    let d = DVector::from_iterator(eig.values.len(), eig.values.iter().map(|&x| f(x)));
    Ok(&eig.vectors * CMatrix::from_diagonal(&d) * eig.vectors.adjoint())
}
