// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON matrix documents.
//!
//! ```text
//! {"rows": 2, "cols": 2, "data": [0.9, 0.2, [0.1, 0.0], 0.8]}
//! ```
//!
//! `data` is row-major; an entry is a real number or an `[re, im]` pair.
//! Writers emit shortest round-trip decimal forms, so reading back a
//! written file reproduces every bit.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    rows: usize,
    cols: usize,
    data: Vec<Entry>,
}

impl From<&ComplexMatrix> for MatrixDoc {
    fn from(m: &ComplexMatrix) -> Self {
        let data = m
            .data()
            .iter()
            .map(|z| if z.im == 0.0 { Entry::Real(z.re) } else { Entry::Complex([z.re, z.im]) })
            .collect();
        MatrixDoc { rows: m.rows(), cols: m.cols(), data }
    }
}

impl TryFrom<MatrixDoc> for ComplexMatrix {
    type Error = Error;

    fn try_from(doc: MatrixDoc) -> Result<Self> {
        let data = doc
            .data
            .into_iter()
            .map(|e| match e {
                Entry::Real(x) => Complex64::new(x, 0.0),
                Entry::Complex([re, im]) => Complex64::new(re, im),
            })
            .collect();
        ComplexMatrix::new(doc.rows, doc.cols, data)
    }
}

pub fn matrix_to_string(m: &ComplexMatrix) -> String {
    serde_json::to_string(&MatrixDoc::from(m)).expect("matrix serialization cannot fail")
}

pub fn matrix_from_str(s: &str) -> Result<ComplexMatrix> {
    let doc: MatrixDoc = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
    doc.try_into()
}

pub fn matrices_to_string(ms: &[ComplexMatrix]) -> String {
    let docs: Vec<MatrixDoc> = ms.iter().map(MatrixDoc::from).collect();
    serde_json::to_string(&docs).expect("matrix serialization cannot fail")
}

pub fn matrices_from_str(s: &str) -> Result<Vec<ComplexMatrix>> {
    let docs: Vec<MatrixDoc> = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
    docs.into_iter().map(ComplexMatrix::try_from).collect()
}

pub fn read_matrix(path: &Path) -> Result<ComplexMatrix> {
    matrix_from_str(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &ComplexMatrix) -> Result<()> {
    fs::write(path, matrix_to_string(m) + "\n")?;
    Ok(())
}

pub fn read_matrices(path: &Path) -> Result<Vec<ComplexMatrix>> {
    matrices_from_str(&fs::read_to_string(path)?)
}

pub fn write_matrices(path: &Path, ms: &[ComplexMatrix]) -> Result<()> {
    fs::write(path, matrices_to_string(ms) + "\n")?;
    Ok(())
}
