use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ComplexMatrix;
use crate::{Error, Result};

/// On-disk form of a complex matrix: `{"rows": n, "cols": m, "re_im": [[re, im], ...]}`
/// with entries in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub re_im: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let mut re_im = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                re_im.push([z.re, z.im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            re_im,
        }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        let expected = j.rows * j.cols;
        if j.re_im.len() != expected {
            return Err(Error::DimensionMismatch {
                context: "matrix JSON entry count",
                expected,
                found: j.re_im.len(),
            });
        }
        if j.re_im.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix JSON contains non-finite entries".into()));
        }
        Ok(ComplexMatrix::from_row_iterator(
            j.rows,
            j.cols,
            j.re_im.into_iter().map(|[re, im]| Complex64::new(re, im)),
        ))
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    serde_json::to_string_pretty(&MatrixJson::from(m)).expect("matrix serialization cannot fail")
}

pub fn matrix_from_json(s: &str) -> Result<ComplexMatrix> {
    let j: MatrixJson = serde_json::from_str(s)?;
    ComplexMatrix::try_from(j)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    matrix_from_json(&text)
}

pub fn write_matrix(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix_to_json(m))
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}
