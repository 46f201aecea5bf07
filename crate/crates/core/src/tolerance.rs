// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Numerical thresholds shared across modules.
//!
//! The dense problems handled here stay at N <= 8 (matrix forms up to
//! 64 x 64), so every bound sits several orders above machine epsilon.

/// Hermiticity, relative to the max-entry norm of the matrix.
pub const HERMITIAN: f64 = 1e-10;

/// Eigenpair residual bound `|m v - lambda v|`.
pub const EIGEN_RESIDUAL: f64 = 1e-9;

/// Inverse residual bound `|m m^-1 - I|_max`.
pub const INVERSE: f64 = 1e-9;

/// Determinants below this modulus are treated as zero.
pub const SINGULAR: f64 = 1e-12;

/// Condition estimate above which an inverse is refused.
pub const CONDITION_MAX: f64 = 1e12;

/// Probability simplex / stochastic column sums / identity condition.
pub const PROBABILITY: f64 = 1e-10;

/// Per-dimension PSD slack; the effective bound is `PSD_PER_DIM * n`.
pub const PSD_PER_DIM: f64 = 1e-9;

/// Ratio tolerance for proportional Kraus operators.
pub const PROPORTIONALITY: f64 = 1e-10;

/// Bisection width for determinant roots in time.
pub const ROOT_WIDTH: f64 = 1e-9;

pub fn psd(n: usize) -> f64 {
    PSD_PER_DIM * n as f64
}
