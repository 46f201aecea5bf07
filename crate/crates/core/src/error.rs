// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Matrix too close to singular to invert reliably.
    #[error("singular matrix (|det| = {det_abs:.3e}, condition estimate = {condition:.3e})")]
    Singular { det_abs: f64, condition: f64 },

    #[error("eigensolver residual {residual:.3e} exceeds bound {bound:.3e}")]
    Convergence { residual: f64, bound: f64 },

    /// Linear dependence among Kraus operators that is not a unit-modulus
    /// proportionality.
    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
