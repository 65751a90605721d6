//! Pauli and 4x4 Dirac gamma matrices.
//!
//! The five mutually anticommuting 4x4 matrices are fixed as
//!
//! ```text
//! G1 = s3 (x) s1    G2 = s3 (x) s2    G3 = s3 (x) s3    G4 = s1 (x) 1    G5 = s2 (x) 1
//! ```
//!
//! with `s1, s2, s3` the Pauli matrices and `(x)` the Kronecker product (left factor is the
//! outer 2x2 block index). They satisfy `{Ga, Gb} = 2 delta_ab 1`.

use crate::numerics::linalg::{c, r, CMatrix, ONE, ZERO};

pub fn identity2() -> CMatrix {
    CMatrix::identity(2, 2)
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO])
}

pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, r(-1.0)])
}

pub fn pauli() -> [CMatrix; 3] {
    [sigma_x(), sigma_y(), sigma_z()]
}

pub fn gamma_matrices() -> [CMatrix; 5] {
    let [sx, sy, sz] = pauli();
    let id = identity2();
    [sz.kronecker(&sx), sz.kronecker(&sy), sz.kronecker(&sz), sx.kronecker(&id), sy.kronecker(&id)]
}

/// `sum_a v_a G_a`.
pub fn gamma_combination(gammas: &[CMatrix; 5], v: &[f64; 5]) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for (g, &x) in gammas.iter().zip(v) {
        m += g * r(x);
    }
    m
}
