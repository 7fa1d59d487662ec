//! Serde adapters: complex numbers travel as `[re, im]` pairs.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn c64_to_pair(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn pair_to_c64(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

pub mod c64_pair {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        c64_to_pair(z).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Ok(pair_to_c64(<[f64; 2]>::deserialize(d)?))
    }
}

pub mod c64_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vec<C64>, s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(c64_to_pair).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        Ok(Vec::<[f64; 2]>::deserialize(d)?
            .into_iter()
            .map(pair_to_c64)
            .collect())
    }
}

pub mod c64_vec_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &Vec<Vec<C64>>, s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|row| row.iter().map(c64_to_pair).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<C64>>, D::Error> {
        Ok(Vec::<Vec<[f64; 2]>>::deserialize(d)?
            .into_iter()
            .map(|row| row.into_iter().map(pair_to_c64).collect())
            .collect())
    }
}

/// Row-major matrix as nested `[re, im]` pairs.
pub mod c64_mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<C64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| c64_to_pair(&m[(i, j)])).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<C64>, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        Ok(DMatrix::from_fn(nrows, ncols, |i, j| pair_to_c64(rows[i][j])))
    }
}
