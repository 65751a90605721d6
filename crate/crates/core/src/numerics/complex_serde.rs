//! Serialization of complex vectors and matrices as nested `[re, im]` pairs (matrices row-major).

use serde::ser::{SerializeSeq, Serializer};

use super::linalg::{CMatrix, CVector};

pub fn vector<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for z in v.iter() {
        seq.serialize_element(&[z.re, z.im])?;
    }
    seq.end()
}

pub fn matrix<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<[f64; 2]> = m.row(i).iter().map(|z| [z.re, z.im]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}
