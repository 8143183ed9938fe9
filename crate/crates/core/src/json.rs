//! JSON encodings shared by the file formats: complex scalars are `[re, im]`
//! pairs and matrices are full row-major nested arrays.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::C64;

pub type JsonComplex = [f64; 2];
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("matrix rows have inconsistent lengths")]
    Ragged,
    #[error("expected a {expected}x{expected} matrix, found {rows} rows")]
    WrongSize { expected: usize, rows: usize },
}

pub fn complex_to_json(z: C64) -> JsonComplex {
    [z.re, z.im]
}

pub fn complex_from_json(z: JsonComplex) -> C64 {
    C64::new(z[0], z[1])
}

pub fn matrix_to_json(m: &DMatrix<C64>) -> JsonMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| complex_to_json(m[(r, c)])).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix) -> Result<DMatrix<C64>, ShapeError> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(ShapeError::Ragged);
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| complex_from_json(rows[r][c])))
}

pub fn vector_to_json(v: &DVector<C64>) -> Vec<JsonComplex> {
    v.iter().map(|&z| complex_to_json(z)).collect()
}

pub fn vector_from_json(v: &[JsonComplex]) -> DVector<C64> {
    DVector::from_iterator(v.len(), v.iter().map(|&z| complex_from_json(z)))
}
