// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Kraus representations of stochastic matrices and the two phase classes
//! built on them.
//!
//! For `L` column-stochastic of size `N`,
//!
//! ```text
//! A_s[j,k] = sqrt(L[j,k] / N) exp(2 pi i s (j - k) / N),   s = 0..N-1
//! ```
//!
//! gives a CPTP map that keeps diagonal states diagonal and acts as `L` on
//! them. Its matrix form is `(L^(1/2) (x) L^(1/2)) o G_N`, a direct sum over
//! the index sets `alpha_j`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channels::{self, KrausSet};
use crate::classical::{StochasticMatrix, TimeFamily};
use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix, IndexSet, ONE, ZERO};
use crate::tolerance;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `exp(2 pi i num / den)`, reducing the fraction first so equal angles
/// give bit-identical values. Quarter turns are exact.
pub fn root_of_unity(num: i64, den: u64) -> Complex64 {
    assert!(den > 0, "root of unity with zero denominator");
    let a = num.rem_euclid(den as i64) as u64;
    if a == 0 {
        return ONE;
    }
    let g = gcd(a, den);
    let (a, den) = (a / g, den / g);
    match (a, den) {
        (1, 2) => Complex64::new(-1.0, 0.0),
        (1, 4) => Complex64::new(0.0, 1.0),
        (3, 4) => Complex64::new(0.0, -1.0),
        _ => Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * a as f64 / den as f64),
    }
}

/// The `N` operators `A_s` built from a stochastic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RepresentationKraus {
    kraus: KrausSet,
    source: StochasticMatrix,
}

impl RepresentationKraus {
    pub fn kraus(&self) -> &KrausSet {
        &self.kraus
    }

    pub fn source(&self) -> &StochasticMatrix {
        &self.source
    }

    pub fn into_kraus(self) -> KrausSet {
        self.kraus
    }
}

pub fn build_representation(lambda: &StochasticMatrix) -> RepresentationKraus {
    let kraus = build_class_member(&ClassSpec::representation(lambda.dim()), lambda)
        .expect("the base class member is always admissible");
    RepresentationKraus { kraus, source: lambda.clone() }
}

/// Merges unit-modulus multiples: a group of `k` copies of `A` becomes
/// `sqrt(k) A`. Zero operators are dropped. Any other linear dependence is
/// reported as `Error::Consistency`.
pub fn repair_dependence(k: &KrausSet) -> Result<KrausSet> {
    let scale = k.ops().iter().map(ComplexMatrix::max_abs).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tol = tolerance::PROPORTIONALITY * scale;
    let ops: Vec<&ComplexMatrix> = k.ops().iter().filter(|a| a.max_abs() > tol).collect();

    let mut taken = vec![false; ops.len()];
    let mut merged = Vec::new();
    for i in 0..ops.len() {
        if taken[i] {
            continue;
        }
        let a = ops[i];
        let pivot = a.data().iter().position(|z| z.norm() > tol).expect("non-zero operator");
        let mut count = 1usize;
        for j in i + 1..ops.len() {
            if taken[j] {
                continue;
            }
            let ratio = ops[j].data()[pivot] / a.data()[pivot];
            if ops[j].max_abs_diff(&a.scale(ratio)) > tol {
                continue;
            }
            if (ratio.norm() - 1.0).abs() > tolerance::PROPORTIONALITY {
                return Err(Error::Consistency(format!(
                    "operators {i} and {j} are proportional with ratio modulus {:.6}",
                    ratio.norm()
                )));
            }
            taken[j] = true;
            count += 1;
        }
        merged.push(a.scale(Complex64::new((count as f64).sqrt(), 0.0)));
    }

    // What remains must be linearly independent.
    let gram = ComplexMatrix::from_fn(merged.len(), merged.len(), |a, b| merged[a].inner(&merged[b]));
    let eig = numerics::hermitian_eigenvalues(&gram)?;
    let top = eig.last().copied().unwrap_or(0.0);
    if eig[0] <= tolerance::PROPORTIONALITY * top {
        return Err(Error::Consistency(format!(
            "{} operators remain linearly dependent after merging proportional copies (Gram eigenvalue {:.3e})",
            merged.len(),
            eig[0]
        )));
    }
    KrausSet::new(merged)
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidArgument(format!("dimension must be at least 2, got {n}")))
    } else {
        Ok(())
    }
}

/// `G_N[Nj+k, Nl+m] = 1` iff `j - k + m - l = 0 mod N`.
pub fn build_g(n: usize) -> Result<ComplexMatrix> {
    check_dim(n)?;
    Ok(ComplexMatrix::from_fn(n * n, n * n, |row, col| {
        let (j, k) = (row / n, row % n);
        let (l, m) = (col / n, col % n);
        if (j + m + 2 * n - k - l).is_multiple_of(n) {
            ONE
        } else {
            ZERO
        }
    }))
}

/// Cyclic shift `C[j,k] = 1` iff `k = j + 1 mod N`.
pub fn build_c(n: usize) -> Result<ComplexMatrix> {
    check_dim(n)?;
    Ok(ComplexMatrix::from_fn(n, n, |j, k| if (j + 1) % n == k { ONE } else { ZERO }))
}

/// `alpha_j = { N k + (j + k) mod N : k = 0..N-1 }`.
pub fn alpha_partition(n: usize) -> Vec<IndexSet> {
    (0..n)
        .map(|j| IndexSet::new((0..n).map(|k| n * k + (j + k) % n).collect()).expect("increasing by construction"))
        .collect()
}

/// `V_j = L^(1/2) o ((C^j)^T L^(1/2) C^j)`, so `V_j[a,b] = sqrt(L[a,b] L[a-j,b-j])`.
///
/// The block of the matrix form on `alpha_c` is `V_{(N-c) mod N}`.
pub fn v_blocks(lambda: &StochasticMatrix) -> Vec<ComplexMatrix> {
    let n = lambda.dim();
    let root = numerics::hadamard_power(lambda.as_matrix(), 0.5).expect("stochastic entries are non-negative");
    if n == 1 {
        return vec![lambda.as_matrix().clone()];
    }
    let c = build_c(n).expect("n >= 2");
    (0..n as u32)
        .map(|j| {
            let cj = c.powi(j);
            let shifted = cj.transpose().matmul(&root).matmul(&cj);
            numerics::hadamard_product(&root, &shifted).expect("same shape")
        })
        .collect()
}

/// `(L^(1/2) (x) L^(1/2)) o G_N`.
pub fn closed_form_matrix(lambda: &StochasticMatrix) -> Result<ComplexMatrix> {
    let root = numerics::hadamard_power(lambda.as_matrix(), 0.5)?;
    numerics::hadamard_product(&numerics::kron(&root, &root), &build_g(lambda.dim())?)
}

/// Phase sign of a class: `+` (class 1) or `-` (class 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PhaseClass {
    Plus = 1,
    Minus = 2,
}

/// Operators `R_s[j,k] = sqrt(L[j,k] / M) exp(2 pi i s (r j +- v k) / M)`,
/// `s = 0..M-1`, with `M = max(r, v) (N - 1) + n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassSpec {
    pub class: PhaseClass,
    pub r: usize,
    pub v: usize,
    pub m: usize,
}

impl ClassSpec {
    pub fn new(class: PhaseClass, r: usize, v: usize, m: usize) -> Self {
        Self { class, r, v, m }
    }

    /// `Phi_N^(1,1)`: the representation itself.
    pub fn representation(n: usize) -> Self {
        Self::new(PhaseClass::Minus, 1, 1, n)
    }

    /// The offset `n` in `M = max(r, v) (N - 1) + n`, after checking the
    /// spec is admissible in dimension `dim`.
    pub fn offset(&self, dim: usize) -> Result<usize> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for (name, x) in [("r", self.r), ("v", self.v)] {
            if x < 1 || x > dim + 1 {
                return Err(Error::InvalidArgument(format!("{name} = {x} outside [1, {}]", dim + 1)));
            }
        }
        let base = self.r.max(self.v) * (dim - 1);
        let top = dim * dim;
        if self.m <= base || self.m > top {
            return Err(Error::InvalidArgument(format!(
                "M = {} outside [{}, {top}] for {self} at N = {dim}",
                self.m,
                base + 1
            )));
        }
        Ok(self.m - base)
    }

    /// Every admissible spec at dimension `dim`, in sorted order.
    pub fn admissible(dim: usize) -> Vec<Self> {
        let mut out = Vec::new();
        for class in [PhaseClass::Plus, PhaseClass::Minus] {
            for r in 1..=dim + 1 {
                for v in 1..=dim + 1 {
                    for m in 1..=dim * dim {
                        let spec = Self::new(class, r, v, m);
                        if spec.offset(dim).is_ok() {
                            out.push(spec);
                        }
                    }
                }
            }
        }
        out
    }

    fn phase_numerator(&self, j: usize, k: usize) -> i64 {
        let (rj, vk) = ((self.r * j) as i64, (self.v * k) as i64);
        match self.class {
            PhaseClass::Plus => rj + vk,
            PhaseClass::Minus => rj - vk,
        }
    }

    /// Entry `(Nj+k, Nl+m)` of the matrix form is nonzero only where the
    /// phases of `(j,l)` and `(k,m)` agree mod `M`; independent of `L`.
    pub fn mask(&self, dim: usize) -> Vec<Vec<bool>> {
        let m = self.m as i64;
        (0..dim * dim)
            .map(|row| {
                (0..dim * dim)
                    .map(|col| {
                        let (j, k) = (row / dim, row % dim);
                        let (l, mm) = (col / dim, col % dim);
                        (self.phase_numerator(j, l) - self.phase_numerator(k, mm)).rem_euclid(m) == 0
                    })
                    .collect()
            })
            .collect()
    }

    /// Connected components of the mask: the matrix form is a direct sum
    /// over these index sets for every `L`.
    pub fn structural_blocks(&self, dim: usize) -> Vec<IndexSet> {
        let mask = self.mask(dim);
        let size = dim * dim;
        let mut label = vec![usize::MAX; size];
        let mut blocks = Vec::new();
        for start in 0..size {
            if label[start] != usize::MAX {
                continue;
            }
            let id = blocks.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            label[start] = id;
            while let Some(a) = stack.pop() {
                members.push(a);
                for b in 0..size {
                    if label[b] == usize::MAX && (mask[a][b] || mask[b][a]) {
                        label[b] = id;
                        stack.push(b);
                    }
                }
            }
            blocks.push(IndexSet::from_unsorted(members));
        }
        blocks
    }
}

impl fmt::Display for ClassSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "class:{} r:{} v:{} M:{}", self.class as u8, self.r, self.v, self.m)
    }
}

impl FromStr for ClassSpec {
    type Err = Error;

    /// Accepts `class:2 r:1 v:1 M:3`, separated by spaces or commas.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: String| Error::InvalidArgument(format!("class spec '{s}': {why}"));
        let (mut class, mut r, mut v, mut m) = (None, None, None, None);
        for token in s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
            let (key, value) = token.split_once(':').ok_or_else(|| bad(format!("expected key:value, got '{token}'")))?;
            let value: usize = value.parse().map_err(|_| bad(format!("'{value}' is not a non-negative integer")))?;
            match key {
                "class" => {
                    class = Some(match value {
                        1 => PhaseClass::Plus,
                        2 => PhaseClass::Minus,
                        other => return Err(bad(format!("class must be 1 or 2, got {other}"))),
                    })
                }
                "r" => r = Some(value),
                "v" => v = Some(value),
                "M" | "m" => m = Some(value),
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        match (class, r, v, m) {
            (Some(class), Some(r), Some(v), Some(m)) => Ok(Self::new(class, r, v, m)),
            _ => Err(bad("needs class, r, v and M".into())),
        }
    }
}

pub fn build_class_member(spec: &ClassSpec, lambda: &StochasticMatrix) -> Result<KrausSet> {
    KrausSet::new(class_member_ops(spec, lambda)?)
}

/// The operators of a class member without the identity-condition check.
pub fn class_member_ops(spec: &ClassSpec, lambda: &StochasticMatrix) -> Result<Vec<ComplexMatrix>> {
    let n = lambda.dim();
    spec.offset(n)?;
    let norm = 1.0 / (spec.m as f64).sqrt();
    let ops: Vec<ComplexMatrix> = (0..spec.m)
        .map(|s| {
            ComplexMatrix::from_fn(n, n, |j, k| {
                let amp = lambda.get(j, k).sqrt() * norm;
                amp * root_of_unity(s as i64 * spec.phase_numerator(j, k), spec.m as u64)
            })
        })
        .collect();
    Ok(ops)
}

/// Outcome of the two dephasing tests on a channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classicality {
    /// Largest entry mapping a diagonal input to an off-diagonal output.
    pub diagonal_leak: f64,
    /// `max |P M - M P|` for the projector `P` onto diagonal indices.
    pub dephasing_defect: f64,
    pub essentially_classical: bool,
}

/// Diagonal states stay diagonal, and the channel commutes with dephasing.
/// Both are read off the matrix form, so checking basis elements suffices.
pub fn classicality(k: &KrausSet, tol: f64) -> Classicality {
    let n = k.dim();
    let form = channels::matrix_form(k);
    let m = form.as_matrix();
    let diag = |i: usize| i / n == i % n;
    let mut diagonal_leak: f64 = 0.0;
    let mut dephasing_defect: f64 = 0.0;
    for row in 0..n * n {
        for col in 0..n * n {
            let z = m[(row, col)].norm();
            if diag(col) && !diag(row) {
                diagonal_leak = diagonal_leak.max(z);
            }
            if diag(row) != diag(col) {
                dephasing_defect = dephasing_defect.max(z);
            }
        }
    }
    Classicality {
        diagonal_leak,
        dephasing_defect,
        essentially_classical: diagonal_leak <= tol && dephasing_defect <= tol,
    }
}

pub fn is_essentially_classical(k: &KrausSet, tol: f64) -> bool {
    classicality(k, tol).essentially_classical
}

/// A determinant root located on a time grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootBracket {
    /// Index into `InvertibilityReport::blocks`.
    pub block: usize,
    pub lo: f64,
    pub hi: f64,
    /// `false` when the root was found by sign change, `true` when only
    /// `|det| < SINGULAR` was observed at a grid point.
    pub near_zero: bool,
}

impl RootBracket {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

#[derive(Clone, Debug)]
pub struct InvertibilityReport {
    pub spec: ClassSpec,
    pub times: Vec<f64>,
    pub blocks: Vec<IndexSet>,
    /// Determinant of the whole matrix form at each grid point.
    pub dets: Vec<Complex64>,
    /// `block_dets[i][b]`: determinant of block `b` at grid point `i`.
    pub block_dets: Vec<Vec<Complex64>>,
    /// Refined roots, one per distinct location, ordered by time.
    pub roots: Vec<RootBracket>,
}

impl InvertibilityReport {
    pub fn has_roots(&self) -> bool {
        !self.roots.is_empty()
    }

    /// Grid points where the whole determinant changes sign.
    pub fn full_sign_changes(&self) -> Vec<(f64, f64)> {
        self.times
            .windows(2)
            .zip(self.dets.windows(2))
            .filter(|(_, d)| d[0].re * d[1].re < 0.0)
            .map(|(t, _)| (t[0], t[1]))
            .collect()
    }
}

fn block_dets(spec: &ClassSpec, fam: &TimeFamily, blocks: &[IndexSet], t: f64) -> Result<(Complex64, Vec<Complex64>)> {
    let lambda = fam.evaluate(t)?;
    let form = channels::matrix_form(&build_class_member(spec, &lambda)?);
    let m = form.as_matrix();
    let dets = blocks
        .iter()
        .map(|b| numerics::determinant(&m.principal_submatrix(b.as_slice())))
        .collect::<Result<Vec<_>>>()?;
    Ok((dets.iter().product(), dets))
}

fn bisect(spec: &ClassSpec, fam: &TimeFamily, blocks: &[IndexSet], block: usize, mut lo: f64, mut hi: f64) -> Result<(f64, f64)> {
    let f = |t: f64| -> Result<f64> { Ok(block_dets(spec, fam, blocks, t)?.1[block].re) };
    let mut f_lo = f(lo)?;
    while hi - lo > tolerance::ROOT_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid)?;
        if f_mid == 0.0 {
            return Ok((mid, mid));
        }
        if f_lo * f_mid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            f_lo = f_mid;
        }
    }
    Ok((lo, hi))
}

/// Determinants of the class member's matrix form along `t_grid`.
///
/// Roots are searched block by block over the structural blocks, since a
/// block that appears squared in the full determinant touches zero without
/// changing sign there. Sign changes are refined by bisection to
/// `ROOT_WIDTH`; grid points with a block `|det| < SINGULAR` are reported
/// as they are.
pub fn invertibility_scan(spec: &ClassSpec, fam: &TimeFamily, t_grid: &[f64]) -> Result<InvertibilityReport> {
    if t_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("time grid must be sorted ascending".into()));
    }
    let dim = fam.dim();
    spec.offset(dim)?;
    let blocks = spec.structural_blocks(dim);

    let evaluated: Vec<(Complex64, Vec<Complex64>)> =
        t_grid.par_iter().map(|&t| block_dets(spec, fam, &blocks, t)).collect::<Result<_>>()?;
    let (dets, per_point): (Vec<_>, Vec<_>) = evaluated.into_iter().unzip();

    let mut found = Vec::new();
    for b in 0..blocks.len() {
        for i in 0..t_grid.len() {
            let d = per_point[i][b];
            if d.norm() < tolerance::SINGULAR {
                found.push(RootBracket { block: b, lo: t_grid[i], hi: t_grid[i], near_zero: true });
                continue;
            }
            if i + 1 < t_grid.len() {
                let next = per_point[i + 1][b];
                if next.norm() >= tolerance::SINGULAR && d.re * next.re < 0.0 {
                    let (lo, hi) = bisect(spec, fam, &blocks, b, t_grid[i], t_grid[i + 1])?;
                    found.push(RootBracket { block: b, lo, hi, near_zero: false });
                }
            }
        }
    }

    found.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.block.cmp(&b.block)));
    let mut roots: Vec<RootBracket> = Vec::new();
    for r in found {
        match roots.last_mut() {
            Some(last) if r.lo <= last.hi + tolerance::ROOT_WIDTH => {
                last.hi = last.hi.max(r.hi);
                last.near_zero &= r.near_zero;
            }
            _ => roots.push(r),
        }
    }

    Ok(InvertibilityReport { spec: *spec, times: t_grid.to_vec(), blocks, dets, block_dets: per_point, roots })
}

/// `B_m = sum_s u[m,s] A_s` for an isometry `u` (`u^dagger u = I`).
pub fn unitary_mix(k: &KrausSet, u: &ComplexMatrix) -> Result<KrausSet> {
    if u.cols() != k.len() {
        return Err(Error::Dimension(format!("mixing matrix has {} columns for {} operators", u.cols(), k.len())));
    }
    let defect = u.adjoint().matmul(u).max_abs_diff(&ComplexMatrix::identity(u.cols()));
    if defect > tolerance::PROBABILITY {
        return Err(Error::Domain(format!("mixing matrix is not an isometry (defect {defect:.3e})")));
    }
    let n = k.dim();
    let ops = (0..u.rows())
        .map(|m| {
            let mut b = ComplexMatrix::zeros(n, n);
            for (s, a) in k.ops().iter().enumerate() {
                b = &b + &a.scale(u[(m, s)]);
            }
            b
        })
        .collect();
    KrausSet::new(ops)
}

/// `K_{Nj+k} = sqrt(L[j,k]) |j><k|`.
pub fn rank_one_kraus(lambda: &StochasticMatrix) -> KrausSet {
    let n = lambda.dim();
    let ops = (0..n * n)
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            let mut a = ComplexMatrix::zeros(n, n);
            a[(j, k)] = Complex64::new(lambda.get(j, k).sqrt(), 0.0);
            a
        })
        .collect();
    KrausSet::new(ops).expect("columns sum to one")
}

/// Unitary `u[s, Nj+k] = exp(2 pi i s (Nj - k) / N^2) / N` taking the
/// rank-one set to `Phi_{N^2}^(N,1)`.
pub fn rank_one_mixer(n: usize) -> ComplexMatrix {
    let nn = (n * n) as u64;
    ComplexMatrix::from_fn(n * n, n * n, |s, idx| {
        let (j, k) = ((idx / n) as i64, (idx % n) as i64);
        root_of_unity(s as i64 * (n as i64 * j - k), nn) / n as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{apply_channel, embed_f, inverse_f, matrix_form};
    use crate::classical::{self, Counterexample3Params, ProbabilityVector};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sorted(set: &IndexSet) -> Vec<usize> {
        set.as_slice().to_vec()
    }

    #[test]
    fn roots_of_unity() {
        assert_eq!(root_of_unity(0, 5), ONE);
        assert_eq!(root_of_unity(7, 7), ONE);
        assert_eq!(root_of_unity(-1, 4), Complex64::new(0.0, -1.0));
        assert_eq!(root_of_unity(2, 4), c(-1.0));
        assert_eq!(root_of_unity(2, 6), root_of_unity(1, 3));
        assert_eq!(root_of_unity(-5, 6), root_of_unity(1, 6));
        assert!((root_of_unity(1, 3) - Complex64::from_polar(1.0, 2.0 * PI / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn representation_entries_are_as_constructed() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let lambda = StochasticMatrix::random(&mut rng, 4);
        let rep = build_representation(&lambda);
        assert_eq!(rep.kraus().len(), 4);
        for (s, a) in rep.kraus().ops().iter().enumerate() {
            for j in 0..4 {
                for k in 0..4 {
                    let phase = 2.0 * PI * s as f64 * (j as f64 - k as f64) / 4.0;
                    let expect = Complex64::from_polar((lambda.get(j, k) / 4.0).sqrt(), phase);
                    assert!((a[(j, k)] - expect).norm() < 1e-15);
                }
            }
        }
        assert_eq!(rep.source(), &lambda);
    }

    #[test]
    fn identity_representation_and_repair() {
        for n in 2..=4 {
            let rep = build_representation(&StochasticMatrix::identity(n));
            let scaled = ComplexMatrix::identity(n).scale(c(1.0 / (n as f64).sqrt()));
            for a in rep.kraus().ops() {
                assert!(a.max_abs_diff(&scaled) < 1e-15);
            }
            let repaired = repair_dependence(rep.kraus()).unwrap();
            assert_eq!(repaired.len(), 1);
            assert!(repaired.ops()[0].max_abs_diff(&ComplexMatrix::identity(n)) < 1e-14);
        }
    }

    #[test]
    fn dichotomic_operators() {
        let gamma = 0.6;
        let fam = classical::dichotomic_family(gamma).unwrap();
        for t in [0.2, 1.0, 3.0] {
            let rep = build_representation(&fam.evaluate(t).unwrap());
            let (ch, sh) = ((gamma * t).cosh().sqrt(), (gamma * t).sinh().sqrt());
            let pre = (-gamma * t / 2.0).exp() / 2f64.sqrt();
            let a0 = ComplexMatrix::from_real_rows(&[[ch, sh], [sh, ch]]).scale(c(pre));
            let a1 = ComplexMatrix::from_real_rows(&[[ch, -sh], [-sh, ch]]).scale(c(pre));
            assert!(rep.kraus().ops()[0].max_abs_diff(&a0) < 1e-14);
            assert!(rep.kraus().ops()[1].max_abs_diff(&a1) < 1e-14);
        }
    }

    #[test]
    fn representation_invariants_bulk() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 2..=6 {
            for _ in 0..50 {
                let lambda = StochasticMatrix::random(&mut rng, n);
                let rep = build_representation(&lambda);
                assert!(rep.kraus().identity_defect() < 1e-12);
                let p = ProbabilityVector::random(&mut rng, n);
                let q = inverse_f(&apply_channel(rep.kraus(), &embed_f(&p)).unwrap()).unwrap();
                assert!(q.max_abs_diff(&classical::evolve(&lambda, &p).unwrap()) < 1e-12);

                let m = matrix_form(rep.kraus());
                assert!(m.as_matrix().max_abs_diff(&closed_form_matrix(&lambda).unwrap()) < 1e-12);
                let split = numerics::direct_sum_extract(m.as_matrix(), &alpha_partition(n)).unwrap();
                assert!(split.max_off_block < 1e-14);
            }
        }
    }

    #[test]
    fn generic_matrices_need_no_repair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let lambda = StochasticMatrix::random(&mut rng, 3);
        let rep = build_representation(&lambda);
        assert_eq!(&repair_dependence(rep.kraus()).unwrap(), rep.kraus());
    }

    #[test]
    fn uniform_circulant_is_independent() {
        // oracle: pairwise proportionality scan with unit-modulus ratio check
        for n in 2..=4 {
            let lambda = StochasticMatrix::circulant(&ProbabilityVector::uniform(n));
            let rep = build_representation(&lambda);
            let ops = rep.kraus().ops();
            for a in 0..n {
                for b in a + 1..n {
                    let ratio = ops[b][(0, 0)] / ops[a][(0, 0)];
                    let proportional = ops[b].max_abs_diff(&ops[a].scale(ratio)) < 1e-12;
                    assert!(!proportional);
                }
            }
            assert_eq!(repair_dependence(rep.kraus()).unwrap().len(), n);
        }
    }

    #[test]
    fn permutation_matrices_merge_to_one_operator() {
        let lambda = StochasticMatrix::new(build_c(3).unwrap()).unwrap();
        let repaired = repair_dependence(build_representation(&lambda).kraus()).unwrap();
        assert_eq!(repaired.len(), 1);
        assert!(essentially_same_forms(&repaired, build_representation(&lambda).kraus()));
    }

    fn essentially_same_forms(a: &KrausSet, b: &KrausSet) -> bool {
        channels::essentially_same(a, b, 1e-12).unwrap()
    }

    #[test]
    fn missing_cyclic_diagonal_gives_non_proportional_dependence() {
        let p = ProbabilityVector::new(vec![0.5, 0.5, 0.0]).unwrap();
        let lambda = StochasticMatrix::circulant(&p);
        let err = repair_dependence(build_representation(&lambda).kraus()).unwrap_err();
        assert!(matches!(err, Error::Consistency(_)), "{err}");
    }

    #[test]
    fn non_unit_proportionality_is_rejected() {
        let h = ComplexMatrix::identity(2).scale(c(0.6));
        let k = KrausSet::new(vec![h.clone(), h.scale(c(4.0 / 3.0))]).unwrap();
        assert!(matches!(repair_dependence(&k), Err(Error::Consistency(_))));
    }

    #[test]
    fn g_and_c_examples() {
        let g2 = build_g(2).unwrap();
        let expect =
            ComplexMatrix::from_real_rows(&[[1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 1.0, 0.0], [0.0, 1.0, 1.0, 0.0], [1.0, 0.0, 0.0, 1.0]]);
        assert_eq!(g2, expect);
        assert_eq!(build_c(2).unwrap(), ComplexMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]));
        assert!(build_g(1).is_err() && build_c(1).is_err());
        for n in 2..=8 {
            let g = build_g(n).unwrap();
            // oracle: delta formula with explicit signed arithmetic
            for row in 0..n * n {
                for col in 0..n * n {
                    let (j, k, l, m) = ((row / n) as i64, (row % n) as i64, (col / n) as i64, (col % n) as i64);
                    let one = (j - k + m - l).rem_euclid(n as i64) == 0;
                    assert_eq!(g[(row, col)], if one { ONE } else { ZERO });
                }
            }
            assert_eq!(g.matmul(&g), g.scale(c(n as f64)));
            assert_eq!(g.adjoint(), g);
            assert_eq!(channels::gamma_reorder(&g).unwrap(), g);
            let cn = build_c(n).unwrap();
            assert_eq!(cn.powi(n as u32), ComplexMatrix::identity(n));
            for j in 0..n {
                assert_eq!((0..n).filter(|&k| cn[(j, k)] == ONE).count(), 1);
                assert_eq!((0..n).filter(|&k| cn[(k, j)] == ONE).count(), 1);
            }
        }
    }

    #[test]
    fn alpha_partition_examples() {
        let a2 = alpha_partition(2);
        assert_eq!(sorted(&a2[0]), vec![0, 3]);
        assert_eq!(sorted(&a2[1]), vec![1, 2]);
        let a3 = alpha_partition(3);
        assert_eq!(sorted(&a3[0]), vec![0, 4, 8]);
        assert_eq!(sorted(&a3[1]), vec![1, 5, 6]);
        assert_eq!(sorted(&a3[2]), vec![2, 3, 7]);
        for n in 2..=8 {
            let mut all: Vec<usize> = alpha_partition(n).iter().flat_map(|s| s.as_slice().to_vec()).collect();
            all.sort_unstable();
            assert_eq!(all, (0..n * n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn v_blocks_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in 2..=5 {
            let lambda = StochasticMatrix::random(&mut rng, n);
            let v = v_blocks(&lambda);
            assert!(v[0].max_abs_diff(lambda.as_matrix()) < 1e-15);

            let circ = StochasticMatrix::circulant(&ProbabilityVector::random(&mut rng, n));
            for vj in v_blocks(&circ) {
                assert!(vj.max_abs_diff(circ.as_matrix()) < 1e-15);
            }

            // oracle: direct sum over s of A_s (x) conj(A_s), entrywise
            let rep = build_representation(&lambda);
            let mut direct = ComplexMatrix::zeros(n * n, n * n);
            for a in rep.kraus().ops() {
                for row in 0..n * n {
                    for col in 0..n * n {
                        let (j, k, l, m) = (row / n, row % n, col / n, col % n);
                        direct[(row, col)] += a[(j, l)] * a[(k, m)].conj();
                    }
                }
            }
            let split = numerics::direct_sum_extract(&direct, &alpha_partition(n)).unwrap();
            assert!(split.clean);
            for (c_idx, block) in split.blocks.iter().enumerate() {
                assert!(block.max_abs_diff(&v[(n - c_idx) % n]) < 1e-14, "N = {n}, alpha_{c_idx}");
            }
        }
    }

    #[test]
    fn class_spec_parsing_and_range() {
        let spec: ClassSpec = "class:2 r:1 v:1 M:3".parse().unwrap();
        assert_eq!(spec, ClassSpec::representation(3));
        assert_eq!(spec.to_string(), "class:2 r:1 v:1 M:3");
        assert_eq!("class:1,r:2,v:1,M:5".parse::<ClassSpec>().unwrap().class, PhaseClass::Plus);
        assert!("class:3 r:1 v:1 M:3".parse::<ClassSpec>().is_err());
        assert!("class:1 r:1 v:1".parse::<ClassSpec>().is_err());
        assert_eq!(spec.offset(3).unwrap(), 1);
        assert!(ClassSpec::new(PhaseClass::Minus, 1, 1, 2).offset(3).is_err());
        assert!(ClassSpec::new(PhaseClass::Minus, 5, 1, 9).offset(3).is_err());
        assert!(ClassSpec::new(PhaseClass::Minus, 1, 1, 10).offset(3).is_err());
        // N = 2: r, v in 1..=3; M in max(r,v)+1..=4
        let count: usize = (1..=3).flat_map(|r| (1..=3).map(move |v| 4 - (r as usize).max(v))).sum();
        assert_eq!(ClassSpec::admissible(2).len(), 2 * count);
    }

    #[test]
    fn base_member_equals_representation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 2..=5 {
            let lambda = StochasticMatrix::random(&mut rng, n);
            let member = build_class_member(&ClassSpec::representation(n), &lambda).unwrap();
            assert_eq!(&member, build_representation(&lambda).kraus());
        }
    }

    #[test]
    fn replication_for_equal_r_and_v() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in 2..=5 {
            let lambda = StochasticMatrix::random(&mut rng, n);
            let base = build_representation(&lambda);
            for r in 2..=n {
                let member = build_class_member(&ClassSpec::new(PhaseClass::Minus, r, r, r * n), &lambda).unwrap();
                for j in 0..r {
                    for s in 0..n {
                        let expect = base.kraus().ops()[s].scale(c(1.0 / (r as f64).sqrt()));
                        assert!(member.ops()[n * j + s].max_abs_diff(&expect) < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn all_admissible_members_are_cptp_and_classical() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3] {
            let lambda = StochasticMatrix::random(&mut rng, n);
            for spec in ClassSpec::admissible(n) {
                let k = build_class_member(&spec, &lambda).unwrap_or_else(|e| panic!("{spec}: {e}"));
                // oracle: sum_s sum_l sqrt(l_lj l_lk) e^{2 pi i s (phase diff)/M} = delta_jk
                for j in 0..n {
                    for kk in 0..n {
                        let mut acc = ZERO;
                        for s in 0..spec.m {
                            for l in 0..n {
                                let diff = spec.phase_numerator(l, kk) - spec.phase_numerator(l, j);
                                let angle = 2.0 * PI * (s as f64) * diff as f64 / spec.m as f64;
                                acc += Complex64::from_polar((lambda.get(l, j) * lambda.get(l, kk)).sqrt() / spec.m as f64, angle);
                            }
                        }
                        let expect = if j == kk { 1.0 } else { 0.0 };
                        assert!((acc - c(expect)).norm() < 1e-12, "{spec}");
                    }
                }
                assert!(is_essentially_classical(&k, 1e-10), "{spec}");
            }
        }
    }

    #[test]
    fn classicality_examples() {
        let dephase = KrausSet::new(
            (0..3)
                .map(|k| ComplexMatrix::from_fn(3, 3, |a, b| if a == k && b == k { ONE } else { ZERO }))
                .collect(),
        )
        .unwrap();
        assert!(is_essentially_classical(&dephase, 1e-12));

        let h = 0.5f64.sqrt();
        let hadamard = KrausSet::new(vec![ComplexMatrix::from_real_rows(&[[h, h], [h, -h]])]).unwrap();
        let report = classicality(&hadamard, 1e-12);
        assert!(!report.essentially_classical);
        // H diag(1,0) H = [[1/2, 1/2], [1/2, 1/2]]
        assert!((report.diagonal_leak - 0.5).abs() < 1e-15);
    }

    #[test]
    fn plus_class_is_singular_at_identity() {
        let id = StochasticMatrix::identity(3);
        for spec in ClassSpec::admissible(3).into_iter().filter(|s| s.class == PhaseClass::Plus) {
            let m = matrix_form(&build_class_member(&spec, &id).unwrap());
            assert!(numerics::determinant(m.as_matrix()).unwrap().norm() < 1e-10, "{spec}");
        }
        let minus = ClassSpec::new(PhaseClass::Minus, 2, 2, 6);
        let m = matrix_form(&build_class_member(&minus, &id).unwrap());
        assert!((numerics::determinant(m.as_matrix()).unwrap() - ONE).norm() < 1e-12);
    }

    #[test]
    fn structural_blocks_reproduce_matrix_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [2, 3] {
            let lambda = StochasticMatrix::random(&mut rng, n);
            for spec in ClassSpec::admissible(n) {
                let m = matrix_form(&build_class_member(&spec, &lambda).unwrap());
                let split = numerics::direct_sum_extract(m.as_matrix(), &spec.structural_blocks(n)).unwrap();
                assert!(split.max_off_block < 1e-14, "{spec}");
                let mask = spec.mask(n);
                for row in 0..n * n {
                    for col in 0..n * n {
                        if !mask[row][col] {
                            assert!(m.as_matrix()[(row, col)].norm() < 1e-14, "{spec}");
                        }
                    }
                }
            }
            let rep_blocks = ClassSpec::representation(n).structural_blocks(n);
            let mut alpha = alpha_partition(n);
            let mut ours = rep_blocks;
            alpha.sort_by_key(|s| s.as_slice()[0]);
            ours.sort_by_key(|s| s.as_slice()[0]);
            assert_eq!(ours, alpha);
        }
    }

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let count = ((hi - lo) / step).round() as usize;
        (0..=count).map(|i| lo + step * i as f64).collect()
    }

    #[test]
    fn representation_of_dichotomic_is_invertible() {
        let fam = classical::dichotomic_family(1.0).unwrap();
        let report = invertibility_scan(&ClassSpec::representation(2), &fam, &grid(0.0, 10.0, 0.05)).unwrap();
        assert!(!report.has_roots(), "{:?}", report.roots);
    }

    #[test]
    fn first_parameter_set_root() {
        let fam = classical::counterexample3_family(Counterexample3Params::FIRST, 1.0).unwrap();
        let spec = ClassSpec::new(PhaseClass::Minus, 1, 1, 4);
        let report = invertibility_scan(&spec, &fam, &grid(0.0, 10.0, 0.05)).unwrap();
        let target = (32.0 + (1.0 + 5.0 * 673f64.sqrt()) / 4.0).ln();
        assert_eq!(report.roots.len(), 1, "{:?}", report.roots);
        let root = report.roots[0];
        assert!(!root.near_zero);
        assert!(root.hi - root.lo <= 1e-9);
        assert!(root.lo - 1e-9 <= target && target <= root.hi + 1e-9, "{root:?} vs {target}");
        assert_eq!(report.full_sign_changes().len(), 1);
    }

    #[test]
    fn second_parameter_set_root() {
        let fam = classical::counterexample3_family(Counterexample3Params::SECOND, 1.0).unwrap();
        let spec = ClassSpec::new(PhaseClass::Minus, 1, 1, 5);
        let report = invertibility_scan(&spec, &fam, &grid(0.0, 10.0, 0.05)).unwrap();
        assert_eq!(report.roots.len(), 1, "{:?}", report.roots);
        let root = report.roots[0];
        assert!(root.lo > 1.99393180 && root.hi < 1.99393181, "{root:?}");
    }

    #[test]
    fn scan_rejects_unsorted_grid() {
        let fam = classical::dichotomic_family(1.0).unwrap();
        assert!(invertibility_scan(&ClassSpec::representation(2), &fam, &[1.0, 0.5]).is_err());
        let empty = invertibility_scan(&ClassSpec::representation(2), &fam, &[]).unwrap();
        assert!(empty.dets.is_empty() && !empty.has_roots());
    }

    #[test]
    fn mixing_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let lambda = StochasticMatrix::random(&mut rng, 3);
        let rep = build_representation(&lambda);
        let same = unitary_mix(rep.kraus(), &ComplexMatrix::identity(3)).unwrap();
        assert_eq!(&same, rep.kraus());
        let u = numerics::random_unitary(&mut rng, 3);
        let mixed = unitary_mix(rep.kraus(), &u).unwrap();
        assert!(essentially_same_forms(&mixed, rep.kraus()));
        let not_unitary = ComplexMatrix::identity(3).scale(c(1.1));
        assert!(matches!(unitary_mix(rep.kraus(), &not_unitary), Err(Error::Domain(_))));
    }

    #[test]
    fn rank_one_set_mixes_into_class_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for n in [2, 3] {
            let lambda = StochasticMatrix::random(&mut rng, n);
            let u = rank_one_mixer(n);
            assert!(u.adjoint().matmul(&u).max_abs_diff(&ComplexMatrix::identity(n * n)) < 1e-14);
            let mixed = unitary_mix(&rank_one_kraus(&lambda), &u).unwrap();
            let target = build_class_member(&ClassSpec::new(PhaseClass::Minus, n, 1, n * n), &lambda).unwrap();
            for (a, b) in mixed.ops().iter().zip(target.ops()) {
                assert!(a.max_abs_diff(b) < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn representation_commutes_with_embedding(seed in any::<u64>(), n in 2usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lambda = StochasticMatrix::random(&mut rng, n);
            let rep = build_representation(&lambda);
            prop_assert!(is_essentially_classical(rep.kraus(), 1e-12));
            let p = ProbabilityVector::random(&mut rng, n);
            let q = inverse_f(&apply_channel(rep.kraus(), &embed_f(&p)).unwrap()).unwrap();
            prop_assert!(q.max_abs_diff(&classical::evolve(&lambda, &p).unwrap()) < 1e-12);
        }
    }
}
