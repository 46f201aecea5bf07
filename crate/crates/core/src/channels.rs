// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Density matrices, Kraus sets and channel matrix forms.
//!
//! With row-major `vec`, a Kraus set `{A_s}` acts as
//! `vec(Phi(rho)) = M vec(rho)` where `M = sum_s A_s (x) conj(A_s)`.

use num_complex::Complex64;

use crate::classical::ProbabilityVector;
use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, ZERO};
use crate::tolerance;

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(rho: ComplexMatrix) -> Result<Self> {
        if !rho.is_square() || rho.rows() == 0 {
            return Err(Error::Dimension(format!("density matrix must be square, got {}x{}", rho.rows(), rho.cols())));
        }
        if !rho.is_hermitian(tolerance::HERMITIAN) {
            return Err(Error::Domain(format!("state is not Hermitian (defect {:.3e})", rho.hermitian_defect())));
        }
        let tr = rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > tolerance::PROBABILITY {
            return Err(Error::Domain(format!("state has trace {tr}")));
        }
        let min = numerics::hermitian_eigenvalues(&rho)?[0];
        if min < -tolerance::psd(rho.rows()) {
            return Err(Error::Domain(format!("state has negative eigenvalue {min:.3e}")));
        }
        Ok(Self(rho))
    }

    pub fn maximally_mixed(n: usize) -> Self {
        Self(ComplexMatrix::identity(n).scale(Complex64::new(1.0 / n as f64, 0.0)))
    }

    /// `|psi><psi|` for a normalized `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let n = psi.len();
        Self::new(ComplexMatrix::from_fn(n, n, |j, k| psi[j] * psi[k].conj()))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }
}

/// Kraus operators of one channel, all `N x N`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausSet {
    ops: Vec<ComplexMatrix>,
}

impl KrausSet {
    /// Checks shapes, `M <= N^2`, and `sum_s A_s^dagger A_s = I`.
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let set = Self::from_ops(ops)?;
        let n = set.dim();
        if set.len() > n * n {
            return Err(Error::InvalidArgument(format!("{} operators exceed N^2 = {}", set.len(), n * n)));
        }
        let defect = set.identity_defect();
        if defect > tolerance::PROBABILITY {
            return Err(Error::Domain(format!("identity condition violated by {defect:.3e}")));
        }
        Ok(set)
    }

    /// Shape checks only; the identity condition may fail.
    pub fn from_ops(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidArgument("empty Kraus set".into()));
        };
        let n = first.rows();
        if n == 0 {
            return Err(Error::Dimension("Kraus operators must be at least 1x1".into()));
        }
        for (s, a) in ops.iter().enumerate() {
            if a.rows() != n || a.cols() != n {
                return Err(Error::Dimension(format!("operator {s} is {}x{}, expected {n}x{n}", a.rows(), a.cols())));
            }
        }
        Ok(Self { ops })
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn into_ops(self) -> Vec<ComplexMatrix> {
        self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ops[0].rows()
    }

    /// `max |sum_s A_s^dagger A_s - I|`.
    pub fn identity_defect(&self) -> f64 {
        let n = self.dim();
        let mut sum = ComplexMatrix::zeros(n, n);
        for a in &self.ops {
            sum = &sum + &a.adjoint().matmul(a);
        }
        sum.max_abs_diff(&ComplexMatrix::identity(n))
    }
}

/// `N^2 x N^2` natural representation of a channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelMatrixForm {
    m: ComplexMatrix,
    n: usize,
}

fn exact_sqrt(d: usize) -> Option<usize> {
    let r = (d as f64).sqrt().round() as usize;
    (r * r == d).then_some(r)
}

impl ChannelMatrixForm {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!("matrix form must be square, got {}x{}", m.rows(), m.cols())));
        }
        let n = exact_sqrt(m.rows())
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Dimension(format!("matrix form size {} is not a square number", m.rows())))?;
        Ok(Self { m, n })
    }

    /// Hilbert-space dimension `N`.
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    /// `unvec(M vec(x))` for any `N x N` input.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.n || x.cols() != self.n {
            return Err(Error::Dimension(format!("{}x{} input for an N = {} channel", x.rows(), x.cols(), self.n)));
        }
        numerics::unvec(&self.m.matmul(&numerics::vec(x)), self.n, self.n)
    }
}

pub fn apply_channel(k: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if k.dim() != rho.dim() {
        return Err(Error::Dimension(format!("N = {} channel applied to a {}-level state", k.dim(), rho.dim())));
    }
    let n = rho.dim();
    let mut out = ComplexMatrix::zeros(n, n);
    for a in k.ops() {
        out = &out + &a.matmul(rho.as_matrix()).matmul(&a.adjoint());
    }
    DensityMatrix::new(out)
}

pub fn matrix_form(k: &KrausSet) -> ChannelMatrixForm {
    let n = k.dim();
    let mut m = ComplexMatrix::zeros(n * n, n * n);
    for a in k.ops() {
        m = &m + &numerics::kron(a, &a.conj());
    }
    ChannelMatrixForm { m, n }
}

/// `p -> diag(p)` in the computational basis.
pub fn embed_f(p: &ProbabilityVector) -> DensityMatrix {
    let v = p.as_slice();
    DensityMatrix(ComplexMatrix::from_fn(v.len(), v.len(), |j, k| if j == k { Complex64::new(v[j], 0.0) } else { ZERO }))
}

pub fn inverse_f(rho: &DensityMatrix) -> Result<ProbabilityVector> {
    let m = rho.as_matrix();
    let off = m.max_abs_diff(&pi_diagonalize(m));
    if off > tolerance::PROBABILITY {
        return Err(Error::Domain(format!("state is not diagonal (off-diagonal modulus {off:.3e})")));
    }
    ProbabilityVector::new((0..m.rows()).map(|j| m[(j, j)].re).collect())
}

/// Dephasing: keeps the diagonal, zeros the rest.
pub fn pi_diagonalize(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |j, k| if j == k { m[(j, k)] } else { ZERO })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CptpCheck {
    pub passed: bool,
    pub max_violation: f64,
}

/// Complete positivity is automatic for a Kraus form, so only the identity
/// condition is tested.
pub fn is_cptp(k: &KrausSet) -> CptpCheck {
    let max_violation = k.identity_defect();
    CptpCheck { passed: max_violation <= tolerance::PROBABILITY, max_violation }
}

pub fn essentially_same(k1: &KrausSet, k2: &KrausSet, tol: f64) -> Result<bool> {
    if k1.dim() != k2.dim() {
        return Err(Error::Dimension(format!("Kraus sets act on N = {} and N = {}", k1.dim(), k2.dim())));
    }
    Ok(matrix_form(k1).m.max_abs_diff(&matrix_form(k2).m) <= tol)
}

/// Reshuffle `G(R)[iN+k, jN+l] = R[iN+j, kN+l]`. An involution that
/// preserves the Hilbert-Schmidt inner product and maps a matrix form to
/// the Choi matrix `sum_s vec(A_s) vec(A_s)^dagger`.
pub fn gamma_reorder(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("reshuffle needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let n = exact_sqrt(m.rows())
        .ok_or_else(|| Error::Dimension(format!("reshuffle needs an N^2 x N^2 matrix, got size {}", m.rows())))?;
    Ok(ComplexMatrix::from_fn(n * n, n * n, |row, col| {
        let (i, k) = (row / n, row % n);
        let (j, l) = (col / n, col % n);
        m[(i * n + j, k * n + l)]
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CpCheck {
    pub passed: bool,
    /// Smallest eigenvalue of the reshuffled form; `None` when it could not
    /// be computed.
    pub min_eigenvalue: Option<f64>,
    pub diagnostic: Option<String>,
}

pub fn is_completely_positive(m: &ChannelMatrixForm, tol: f64) -> CpCheck {
    let choi = gamma_reorder(&m.m).expect("matrix form is N^2 x N^2");
    if !choi.is_hermitian(tolerance::HERMITIAN) {
        return CpCheck {
            passed: false,
            min_eigenvalue: None,
            diagnostic: Some(format!("reshuffled form is not Hermitian (defect {:.3e})", choi.hermitian_defect())),
        };
    }
    match numerics::hermitian_eigenvalues(&choi) {
        Ok(values) => {
            let min = values[0];
            CpCheck { passed: min >= -tol, min_eigenvalue: Some(min), diagnostic: None }
        }
        Err(e) => CpCheck { passed: false, min_eigenvalue: None, diagnostic: Some(e.to_string()) },
    }
}
