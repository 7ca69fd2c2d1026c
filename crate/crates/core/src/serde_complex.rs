//! Serde adapters that write complex values as `[re, im]` pairs.

use alloc::vec::Vec;

use nalgebra::Dyn;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMatrix, CVector, Complex64};

fn pair(z: &Complex64) -> [f64; 2] {
    [z.re, z.im]
}

/// `CVector` as `[[re, im], ...]`.
pub mod vector {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVector, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVector, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVector::from_iterator(
            pairs.len(),
            pairs.iter().map(|p| Complex64::new(p[0], p[1])),
        ))
    }
}

/// `CMatrix` as a list of rows, each a list of `[re, im]` pairs.
pub mod matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = m
            .row_iter()
            .map(|r| r.iter().map(pair).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged complex matrix"));
        }
        Ok(CMatrix::from_fn_generic(Dyn(nrows), Dyn(ncols), |i, j| {
            Complex64::new(rows[i][j][0], rows[i][j][1])
        }))
    }
}
