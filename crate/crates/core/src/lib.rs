// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Quantum embeddings of classical stochastic dynamics.
//!
//! A column-stochastic matrix `L` becomes a CPTP map through Kraus operators
//! `A_s[j,k] = sqrt(L[j,k] / N) exp(2 pi i s (j - k) / N)`. The map sends
//! diagonal density matrices to diagonal density matrices and reproduces `L`
//! on their diagonals. The crate builds these embeddings and the broader
//! classes of operators with the same property. It also compares classical
//! and quantum divisibility of time families.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channels;
pub mod classical;
pub mod cli;
pub mod divisibility;
pub mod error;
pub mod format;
pub mod numerics;
pub mod representation;
pub mod tolerance;
pub mod verify;

pub use error::{Error, Result};
pub use numerics::ComplexMatrix;
