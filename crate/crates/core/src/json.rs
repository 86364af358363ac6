//! JSON encodings for matrices used in reports and fixtures.
//!
//! Complex matrices are stored as `{"rows", "cols", "re", "im"}` with
//! row-major nested arrays; real matrices as plain nested arrays.

use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, RMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&CMatrix> for ComplexMatrixJson {
    fn from(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let re = (0..rows).map(|i| (0..cols).map(|j| m[(i, j)].re).collect()).collect();
        let im = (0..rows).map(|i| (0..cols).map(|j| m[(i, j)].im).collect()).collect();
        Self { rows, cols, re, im }
    }
}

impl ComplexMatrixJson {
    pub fn to_matrix(&self) -> crate::Result<CMatrix> {
        let shape_ok = self.re.len() == self.rows
            && self.im.len() == self.rows
            && self.re.iter().chain(&self.im).all(|r| r.len() == self.cols);
        if !shape_ok {
            return Err(crate::Error::DimensionMismatch(format!(
                "matrix json declares {}x{} but arrays disagree",
                self.rows, self.cols
            )));
        }
        Ok(CMatrix::from_fn(self.rows, self.cols, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }
}

pub fn real_rows(m: &RMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

pub fn real_from_rows(rows: &[Vec<f64>]) -> crate::Result<RMatrix> {
    let n = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != c) {
        return Err(crate::Error::DimensionMismatch("ragged matrix rows".into()));
    }
    Ok(RMatrix::from_fn(n, c, |i, j| rows[i][j]))
}

/// serde adapter for `RMatrix` fields as nested row arrays.
pub mod real_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &RMatrix, s: S) -> Result<S::Ok, S::Error> {
        real_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RMatrix, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        real_from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// serde adapter for `CMatrix` fields via [`ComplexMatrixJson`].
pub mod complex_matrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        ComplexMatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        ComplexMatrixJson::deserialize(d)?.to_matrix().map_err(serde::de::Error::custom)
    }
}
