// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Dense complex-matrix kernels.
//!
//! Storage is row-major. `vec` stacks rows, so entry `j * cols + k` of
//! `vec(a)` is `a[(j, k)]`; every reshuffle in the crate assumes this order.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries supplied for a {}x{} matrix",
                data.len(),
                rows,
                cols
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Builds a real matrix from nested rows. Panics on ragged input.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), n_cols, "ragged rows");
            data.extend(r.as_ref().iter().map(|&x| Complex64::new(x, 0.0)));
        }
        Self { rows: n_rows, cols: n_cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..rows {
            for k in 0..cols {
                data.push(f(j, k));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |j, k| if j == k { ONE } else { ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |j, k| self[(k, j)].conj())
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |j, k| self[(k, j)])
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&z| f(z)).collect() }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|z| z * c)
    }

    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(j, l)];
                if a == ZERO {
                    continue;
                }
                for k in 0..other.cols {
                    out.data[j * other.cols + k] += a * other[(l, k)];
                }
            }
        }
        Ok(out)
    }

    /// Matrix product. Panics on incompatible shapes; use `try_matmul` for
    /// unchecked input.
    pub fn matmul(&self, other: &Self) -> Self {
        self.try_matmul(other).expect("matmul shape mismatch")
    }

    /// Non-negative integer power of a square matrix.
    pub fn powi(&self, k: u32) -> Self {
        assert!(self.is_square(), "powi on non-square matrix");
        (0..k).fold(Self::identity(self.rows), |acc, _| acc.matmul(self))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|j| self[(j, j)]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance; `f64::INFINITY` when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Hilbert-Schmidt inner product `tr(self^dagger other)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "inner product shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for j in 0..self.rows {
            for k in j..self.cols {
                worst = worst.max((self[(j, k)] - self[(k, j)].conj()).norm());
            }
        }
        worst
    }

    /// Hermitian within `tol` relative to the max-entry norm.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Largest imaginary part modulus.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    pub fn principal_submatrix(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), indices.len(), |a, b| self[(indices[a], indices[b])])
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |j, k| m[(j, k)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (j, k): (usize, usize)) -> &Complex64 {
        assert!(j < self.rows && k < self.cols, "index ({j}, {k}) out of bounds");
        &self.data[j * self.cols + k]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (j, k): (usize, usize)) -> &mut Complex64 {
        assert!(j < self.rows && k < self.cols, "index ({j}, {k}) out of bounds");
        &mut self.data[j * self.cols + k]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for j in 0..self.rows {
            write!(f, "  ")?;
            for k in 0..self.cols {
                let z = self[(j, k)];
                write!(f, "{:>10.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Strictly increasing list of indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "index set {indices:?} is not strictly increasing"
            )));
        }
        Ok(Self(indices))
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }
}

pub fn hadamard_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if (a.rows, a.cols) != (b.rows, b.cols) {
        return Err(Error::Dimension(format!(
            "Hadamard product of {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(ComplexMatrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect(),
    })
}

/// Entrywise power. Integer exponents accept any entry; fractional ones
/// require real non-negative entries and use the principal root.
pub fn hadamard_power(a: &ComplexMatrix, r: f64) -> Result<ComplexMatrix> {
    if r.fract() == 0.0 && r.abs() <= i32::MAX as f64 {
        let k = r as i32;
        if k < 0 && a.data.contains(&ZERO) {
            return Err(Error::Domain("negative Hadamard power of a zero entry".into()));
        }
        return Ok(a.map(|z| z.powi(k)));
    }
    let mut data = Vec::with_capacity(a.data.len());
    for (pos, z) in a.data.iter().enumerate() {
        if z.im != 0.0 || z.re < 0.0 {
            return Err(Error::Domain(format!(
                "fractional Hadamard power of entry ({}, {}) = {}",
                pos / a.cols,
                pos % a.cols,
                z
            )));
        }
        if z.re == 0.0 && r < 0.0 {
            return Err(Error::Domain("negative Hadamard power of a zero entry".into()));
        }
        data.push(Complex64::new(z.re.powf(r), 0.0));
    }
    Ok(ComplexMatrix { rows: a.rows, cols: a.cols, data })
}

/// Kronecker product: entry `(p*j + k, q*l + m)` is `a[j,l] * b[k,m]` for
/// `b` of shape `p x q`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (p, q) = (b.rows, b.cols);
    ComplexMatrix::from_fn(a.rows * p, a.cols * q, |row, col| {
        a[(row / p, col / q)] * b[(row % p, col % q)]
    })
}

/// Row-major stacking into a column.
pub fn vec(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix { rows: a.data.len(), cols: 1, data: a.data.clone() }
}

pub fn unvec(v: &ComplexMatrix, rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if v.cols != 1 || v.rows != rows * cols {
        return Err(Error::Dimension(format!(
            "cannot reshape {}x{} into {}x{}",
            v.rows, v.cols, rows, cols
        )));
    }
    Ok(ComplexMatrix { rows, cols, data: v.data.clone() })
}

/// Principal blocks of a matrix over a partition of its index range.
#[derive(Clone, Debug)]
pub struct DirectSum {
    pub blocks: Vec<ComplexMatrix>,
    /// Largest modulus found outside the union of diagonal blocks.
    pub max_off_block: f64,
    /// `max_off_block` is negligible against the matrix scale.
    pub clean: bool,
}

fn check_partition(n: usize, sets: &[IndexSet]) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; n];
    for (b, set) in sets.iter().enumerate() {
        for &i in set.as_slice() {
            if i >= n {
                return Err(Error::InvalidArgument(format!("index {i} outside 0..{n}")));
            }
            if owner[i] != usize::MAX {
                return Err(Error::InvalidArgument(format!("index {i} appears in two blocks")));
            }
            owner[i] = b;
        }
    }
    if let Some(i) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::InvalidArgument(format!("index {i} not covered by any block")));
    }
    Ok(owner)
}

pub fn direct_sum_extract(m: &ComplexMatrix, sets: &[IndexSet]) -> Result<DirectSum> {
    if !m.is_square() {
        return Err(Error::Dimension("direct sum of a non-square matrix".into()));
    }
    let owner = check_partition(m.rows, sets)?;
    let blocks = sets.iter().map(|s| m.principal_submatrix(s.as_slice())).collect();
    let mut max_off_block: f64 = 0.0;
    for j in 0..m.rows {
        for k in 0..m.cols {
            if owner[j] != owner[k] {
                max_off_block = max_off_block.max(m[(j, k)].norm());
            }
        }
    }
    let clean = max_off_block <= tolerance::PROBABILITY * m.max_abs().max(1.0);
    Ok(DirectSum { blocks, max_off_block, clean })
}

/// Inverse of `direct_sum_extract`: scatters blocks back, zeros elsewhere.
pub fn direct_sum_assemble(blocks: &[ComplexMatrix], sets: &[IndexSet]) -> Result<ComplexMatrix> {
    if blocks.len() != sets.len() {
        return Err(Error::Dimension("block count differs from index-set count".into()));
    }
    let n = sets.iter().map(IndexSet::len).sum();
    check_partition(n, sets)?;
    let mut out = ComplexMatrix::zeros(n, n);
    for (block, set) in blocks.iter().zip(sets) {
        let idx = set.as_slice();
        if block.rows != idx.len() || block.cols != idx.len() {
            return Err(Error::Dimension("block shape differs from its index set".into()));
        }
        for (a, &j) in idx.iter().enumerate() {
            for (b, &k) in idx.iter().enumerate() {
                out[(j, k)] = block[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if !m.is_square() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    if !m.is_hermitian(tolerance::HERMITIAN) {
        return Err(Error::Domain(format!(
            "matrix is not Hermitian (defect {:.3e})",
            m.hermitian_defect()
        )));
    }
    if m.rows == 0 {
        return Ok(Vec::new());
    }
    let sym = (m + &m.adjoint()).scale(Complex64::new(0.5, 0.0));
    let eig = nalgebra::SymmetricEigen::new(sym.to_nalgebra());
    let bound = tolerance::EIGEN_RESIDUAL * sym.max_abs().max(1.0);
    let a = sym.to_nalgebra();
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let residual = (&a * v - v * Complex64::new(lambda, 0.0)).norm();
        if residual > bound {
            return Err(Error::Convergence { residual, bound });
        }
    }
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

#[derive(Clone, Debug)]
pub struct DetInverse {
    pub det: Complex64,
    /// `None` when the matrix is flagged singular.
    pub inverse: Option<ComplexMatrix>,
    /// One-norm condition estimate; infinite when no inverse exists.
    pub condition: f64,
}

impl DetInverse {
    pub fn is_singular(&self) -> bool {
        self.inverse.is_none()
    }

    pub fn into_inverse(self) -> Result<ComplexMatrix> {
        match self.inverse {
            Some(inv) => Ok(inv),
            None => Err(Error::Singular { det_abs: self.det.norm(), condition: self.condition }),
        }
    }
}

fn one_norm(m: &ComplexMatrix) -> f64 {
    (0..m.cols).map(|k| (0..m.rows).map(|j| m[(j, k)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn determinant(m: &ComplexMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::Dimension("determinant of a non-square matrix".into()));
    }
    if m.rows == 0 {
        return Ok(ONE);
    }
    Ok(m.to_nalgebra().lu().determinant())
}

/// Determinant plus inverse when `|det| >= SINGULAR` and the condition
/// estimate stays below `CONDITION_MAX`.
pub fn det_and_inverse(m: &ComplexMatrix) -> Result<DetInverse> {
    let det = determinant(m)?;
    let singular = DetInverse { det, inverse: None, condition: f64::INFINITY };
    if det.norm() < tolerance::SINGULAR {
        return Ok(singular);
    }
    let Some(inv) = m.to_nalgebra().lu().try_inverse() else {
        return Ok(singular);
    };
    let inv = ComplexMatrix::from_nalgebra(&inv);
    let condition = one_norm(m) * one_norm(&inv);
    if !condition.is_finite() || condition > tolerance::CONDITION_MAX {
        return Ok(DetInverse { det, inverse: None, condition });
    }
    let residual = m.matmul(&inv).max_abs_diff(&ComplexMatrix::identity(m.rows));
    if residual > tolerance::INVERSE {
        return Ok(DetInverse { det, inverse: None, condition });
    }
    Ok(DetInverse { det, inverse: Some(inv), condition })
}

pub fn inverse(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    det_and_inverse(m)?.into_inverse()
}

/// Matrix exponential (Padé scaling and squaring).
pub fn expm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension("exponential of a non-square matrix".into()));
    }
    Ok(ComplexMatrix::from_nalgebra(&m.to_nalgebra().exp()))
}

/// Unitary from the QR factor of a matrix with uniform entries in the unit
/// square. Not Haar distributed; good enough for invariance tests.
pub fn random_unitary(rng: &mut impl rand::Rng, n: usize) -> ComplexMatrix {
    let raw = ComplexMatrix::from_fn(n, n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    ComplexMatrix::from_nalgebra(&raw.to_nalgebra().qr().q())
}

/// First `cols` columns of a random unitary: `T^dagger T = I`.
pub fn random_isometry(rng: &mut impl rand::Rng, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(cols <= rows, "isometry needs cols <= rows");
    let u = random_unitary(rng, rows);
    ComplexMatrix::from_fn(rows, cols, |j, k| u[(j, k)])
}
