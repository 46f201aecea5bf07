// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical side: probability vectors, column-stochastic matrices, time
//! families and their divisibility.
//!
//! Every stochastic matrix here is column-stochastic (`sum_j L[j,k] = 1` for
//! each column `k`). Row-stochastic data must be transposed before use.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix};
use crate::tolerance;

/// Point of the probability simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityVector(Vec<f64>);

impl ProbabilityVector {
    /// Entries in `[-PROBABILITY, 0)` are clamped to zero.
    pub fn new(mut p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidArgument("empty probability vector".into()));
        }
        for (i, x) in p.iter_mut().enumerate() {
            if !x.is_finite() || *x < -tolerance::PROBABILITY {
                return Err(Error::Domain(format!("probability entry {i} is {x}")));
            }
            if *x < 0.0 {
                *x = 0.0;
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > tolerance::PROBABILITY {
            return Err(Error::Domain(format!("probabilities sum to {sum}")));
        }
        Ok(Self(p))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    pub fn basis(n: usize, k: usize) -> Self {
        let mut p = vec![0.0; n];
        p[k] = 1.0;
        Self(p)
    }

    pub fn random(rng: &mut impl Rng, n: usize) -> Self {
        let raw: Vec<f64> = (0..n).map(|_| -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln()).collect();
        let s: f64 = raw.iter().sum();
        Self(raw.into_iter().map(|x| x / s).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Why a matrix fails to be column-stochastic.
fn stochastic_violation(m: &ComplexMatrix, tol: f64) -> Option<String> {
    if !m.is_square() {
        return Some(format!("matrix is {}x{}, not square", m.rows(), m.cols()));
    }
    let n = m.rows();
    for j in 0..n {
        for k in 0..n {
            let z = m[(j, k)];
            if z.im.abs() > tol {
                return Some(format!("entry ({j}, {k}) has imaginary part {}", z.im));
            }
            if z.re < -tol {
                return Some(format!("negative entry {} at ({j}, {k})", z.re));
            }
        }
    }
    for k in 0..n {
        let s: f64 = (0..n).map(|j| m[(j, k)].re).sum();
        if (s - 1.0).abs() > tol {
            return Some(format!("column {k} sums to {s}, expected 1"));
        }
    }
    None
}

pub fn is_stochastic(m: &ComplexMatrix, tol: f64) -> bool {
    stochastic_violation(m, tol).is_none()
}

/// Real, non-negative, column-stochastic square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix(ComplexMatrix);

impl StochasticMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if let Some(why) = stochastic_violation(&m, tolerance::PROBABILITY) {
            return Err(Error::Domain(format!("not column-stochastic: {why}")));
        }
        let cleaned = m.map(|z| Complex64::new(z.re.max(0.0), 0.0));
        Ok(Self(cleaned))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_rows(rows))
    }

    pub fn identity(n: usize) -> Self {
        Self(ComplexMatrix::identity(n))
    }

    /// Columns drawn uniformly from the simplex.
    pub fn random(rng: &mut impl Rng, n: usize) -> Self {
        let cols: Vec<ProbabilityVector> = (0..n).map(|_| ProbabilityVector::random(rng, n)).collect();
        Self(ComplexMatrix::from_fn(n, n, |j, k| Complex64::new(cols[k].0[j], 0.0)))
    }

    /// Circulant matrix whose first column is `p`.
    pub fn circulant(p: &ProbabilityVector) -> Self {
        let n = p.dim();
        Self(ComplexMatrix::from_fn(n, n, |j, k| Complex64::new(p.0[(j + n - k) % n], 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.0[(j, k)].re
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn is_circulant(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|k| (self.get(j, k) - self.get((j + 1) % n, (k + 1) % n)).abs() <= tol))
    }
}

pub fn evolve(lambda: &StochasticMatrix, p: &ProbabilityVector) -> Result<ProbabilityVector> {
    let n = lambda.dim();
    if p.dim() != n {
        return Err(Error::Dimension(format!("{n}x{n} matrix applied to a length-{} vector", p.dim())));
    }
    let out = (0..n).map(|j| (0..n).map(|k| lambda.get(j, k) * p.0[k]).sum()).collect();
    ProbabilityVector::new(out)
}

type Evaluator = dyn Fn(f64) -> ComplexMatrix + Send + Sync;

/// A propagator `t -> L(t, t1)` together with its identity and parameters.
#[derive(Clone)]
pub struct TimeFamily {
    id: String,
    t1: f64,
    params: BTreeMap<String, f64>,
    evaluator: Arc<Evaluator>,
}

impl fmt::Debug for TimeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeFamily").field("id", &self.id).field("t1", &self.t1).field("params", &self.params).finish()
    }
}

impl TimeFamily {
    /// The evaluator must be pure; scans call it from several threads.
    pub fn new(
        id: impl Into<String>,
        t1: f64,
        params: BTreeMap<String, f64>,
        evaluator: impl Fn(f64) -> ComplexMatrix + Send + Sync + 'static,
    ) -> Result<Self> {
        let fam = Self { id: id.into(), t1, params, evaluator: Arc::new(evaluator) };
        let start = fam.evaluate(t1)?;
        let dev = start.as_matrix().max_abs_diff(&ComplexMatrix::identity(start.dim()));
        if dev > tolerance::PROBABILITY {
            return Err(Error::Domain(format!("family {} does not start at the identity (deviation {dev:.3e})", fam.id)));
        }
        Ok(fam)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn dim(&self) -> usize {
        (self.evaluator)(self.t1).rows()
    }

    pub fn evaluate(&self, t: f64) -> Result<StochasticMatrix> {
        if !(t >= self.t1) {
            return Err(Error::InvalidArgument(format!("time {t} precedes the initial time {}", self.t1)));
        }
        StochasticMatrix::new((self.evaluator)(t))
    }
}

/// `L(t, s) = L(t, t1) L(s, t1)^-1` and whether it is stochastic.
#[derive(Clone, Debug)]
pub struct IntermediateMatrix {
    pub matrix: ComplexMatrix,
    pub stochastic: bool,
    pub min_entry: f64,
}

/// Fails with `Error::Singular` when `L(s, t1)` cannot be inverted, so grid
/// scans can record the point and move on.
pub fn intermediate_matrix(fam: &TimeFamily, t: f64, s: f64) -> Result<IntermediateMatrix> {
    if t < s {
        return Err(Error::InvalidArgument(format!("t = {t} precedes s = {s}")));
    }
    let lt = fam.evaluate(t)?;
    let ls = fam.evaluate(s)?;
    let inv = numerics::inverse(ls.as_matrix())?;
    let matrix = lt.as_matrix().matmul(&inv);
    let min_entry = matrix.data().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let stochastic = is_stochastic(&matrix, tolerance::PROBABILITY);
    Ok(IntermediateMatrix { matrix, stochastic, min_entry })
}

/// Max-entry test of `L(t,u) = L(t,s) L(s,u)`.
pub fn chapman_kolmogorov_check(fam: &TimeFamily, t: f64, s: f64, u: f64, tol: f64) -> Result<bool> {
    if !(t >= s && s >= u) {
        return Err(Error::InvalidArgument(format!("times must satisfy t >= s >= u, got {t}, {s}, {u}")));
    }
    let tu = intermediate_matrix(fam, t, u)?.matrix;
    let ts = intermediate_matrix(fam, t, s)?.matrix;
    let su = intermediate_matrix(fam, s, u)?.matrix;
    Ok(tu.max_abs_diff(&ts.matmul(&su)) <= tol)
}

fn positive_rate(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("rate must be positive, got {gamma}")))
    }
}

/// Symmetric two-state jump process with rate `gamma`.
pub fn dichotomic_family(gamma: f64) -> Result<TimeFamily> {
    positive_rate(gamma)?;
    let params = BTreeMap::from([("gamma".to_string(), gamma)]);
    TimeFamily::new("dichotomic", 0.0, params, move |t| {
        let e = (-2.0 * gamma * t).exp();
        ComplexMatrix::from_real_rows(&[[(1.0 + e) / 2.0, (1.0 - e) / 2.0], [(1.0 - e) / 2.0, (1.0 + e) / 2.0]])
    })
}

/// Two-state family `(1 +- q(t))/2` with `q(t) = exp(-gamma t) cos(gamma t)`.
/// Its intermediates lose positivity once `q` changes sign.
pub fn oscillatory_family(gamma: f64) -> Result<TimeFamily> {
    positive_rate(gamma)?;
    let params = BTreeMap::from([("gamma".to_string(), gamma)]);
    TimeFamily::new("oscillatory", 0.0, params, move |t| {
        let q = (-gamma * t).exp() * (gamma * t).cos();
        ComplexMatrix::from_real_rows(&[[(1.0 + q) / 2.0, (1.0 - q) / 2.0], [(1.0 - q) / 2.0, (1.0 + q) / 2.0]])
    })
}

/// Parameters of the three-level family
/// `L(t) = e^{-g t} I + 2 e^{-g t/2} sinh(g t/2) P` with
/// `P = [[a, b, c], [d, e, f], [x, y, z]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Counterexample3Params {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Counterexample3Params {
    pub const FIRST: Self = Self { a: 1.0 / 3.0, b: 0.0, c: 9.0 / 20.0, d: 4.0 / 15.0, e: 1.0 / 3.0, f: 1.0 / 20.0 };
    pub const SECOND: Self = Self { a: 0.0, b: 0.25, c: 0.0, d: 0.1, e: 0.0, f: 0.2 };

    pub fn set(index: u32) -> Result<Self> {
        match index {
            1 => Ok(Self::FIRST),
            2 => Ok(Self::SECOND),
            other => Err(Error::InvalidArgument(format!("parameter set {other} does not exist (use 1 or 2)"))),
        }
    }

    pub fn x(&self) -> f64 {
        1.0 - self.a - self.d
    }

    pub fn y(&self) -> f64 {
        1.0 - self.b - self.e
    }

    pub fn z(&self) -> f64 {
        1.0 - self.c - self.f
    }

    pub fn validate(&self) -> Result<()> {
        let named = [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d), ("e", self.e), ("f", self.f)];
        for (name, v) in named {
            if !(v >= 0.0) {
                return Err(Error::InvalidArgument(format!("parameter {name} = {v} must be non-negative")));
            }
        }
        for (name, v) in [("x = 1 - a - d", self.x()), ("y = 1 - b - e", self.y()), ("z = 1 - c - f", self.z())] {
            if v < -tolerance::PROBABILITY {
                return Err(Error::InvalidArgument(format!("{name} = {v} is negative")));
            }
        }
        Ok(())
    }

    pub fn transition(&self) -> [[f64; 3]; 3] {
        [[self.a, self.b, self.c], [self.d, self.e, self.f], [self.x().max(0.0), self.y().max(0.0), self.z().max(0.0)]]
    }
}

pub fn counterexample3_family(params: Counterexample3Params, gamma: f64) -> Result<TimeFamily> {
    positive_rate(gamma)?;
    params.validate()?;
    let p = params.transition();
    let named = BTreeMap::from([
        ("gamma".to_string(), gamma),
        ("a".to_string(), params.a),
        ("b".to_string(), params.b),
        ("c".to_string(), params.c),
        ("d".to_string(), params.d),
        ("e".to_string(), params.e),
        ("f".to_string(), params.f),
    ]);
    TimeFamily::new("counterexample3", 0.0, named, move |t| {
        let decay = (-gamma * t).exp();
        let weight = 2.0 * (-gamma * t / 2.0).exp() * (gamma * t / 2.0).sinh();
        ComplexMatrix::from_fn(3, 3, |j, k| {
            let diag = if j == k { decay } else { 0.0 };
            Complex64::new(diag + weight * p[j][k], 0.0)
        })
    })
}

/// Checks that `w` generates a stochastic semigroup: non-negative
/// off-diagonal rates and zero column sums.
pub fn validate_generator(w: &ComplexMatrix) -> Result<()> {
    if !w.is_square() {
        return Err(Error::Dimension("generator must be square".into()));
    }
    let n = w.rows();
    let scale = w.max_abs().max(1.0);
    for k in 0..n {
        let mut col = 0.0;
        for j in 0..n {
            let z = w[(j, k)];
            if z.im.abs() > tolerance::PROBABILITY * scale {
                return Err(Error::Domain(format!("generator entry ({j}, {k}) is complex")));
            }
            if j != k && z.re < 0.0 {
                return Err(Error::Domain(format!("negative rate {} at ({j}, {k})", z.re)));
            }
            col += z.re;
        }
        if col.abs() > tolerance::PROBABILITY * scale {
            return Err(Error::Domain(format!("generator column {k} sums to {col}")));
        }
    }
    Ok(())
}

/// Rates uniform in `[0, max_rate)`; the diagonal balances each column.
pub fn random_generator(rng: &mut impl Rng, n: usize, max_rate: f64) -> ComplexMatrix {
    let mut w = ComplexMatrix::from_fn(n, n, |j, k| {
        if j == k {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(rng.gen::<f64>() * max_rate, 0.0)
        }
    });
    for k in 0..n {
        let s: f64 = (0..n).filter(|&j| j != k).map(|j| w[(j, k)].re).sum();
        w[(k, k)] = Complex64::new(-s, 0.0);
    }
    w
}

/// `L(t) = exp(t W)`; every intermediate is stochastic.
pub fn semigroup_family(generator: ComplexMatrix) -> Result<TimeFamily> {
    validate_generator(&generator)?;
    let n = generator.rows();
    let mut params = BTreeMap::new();
    for j in 0..n {
        for k in 0..n {
            params.insert(format!("w{j}{k}"), generator[(j, k)].re);
        }
    }
    TimeFamily::new("semigroup", 0.0, params, move |t| {
        let scaled = generator.scale(Complex64::new(t, 0.0));
        numerics::expm(&scaled).expect("square generator").map(|z| Complex64::new(z.re, 0.0))
    })
}

/// Three-time joint distribution of a two-state process, indexed
/// `[j3][j2][j1]`, with the conditional kernel `p(j3, j2 | j1)` kept beside
/// it so histories starting in a zero-probability state stay addressable.
#[derive(Clone, Debug, PartialEq)]
pub struct JointProb3 {
    table: [[[f64; 2]; 2]; 2],
    kernel: [[[f64; 2]; 2]; 2],
    pub epsilon: f64,
    pub q: ProbabilityVector,
}

fn memory_kernel(epsilon: f64) -> [[[f64; 2]; 2]; 2] {
    let mut k = [[[0.0; 2]; 2]; 2];
    // started in 0
    k[0][0][0] = epsilon / 2.0;
    k[1][1][0] = epsilon / 2.0;
    k[1][0][0] = (1.0 - epsilon) / 2.0;
    k[0][1][0] = (1.0 - epsilon) / 2.0;
    // started in 1
    k[0][1][1] = 0.5;
    k[1][0][1] = 0.5;
    k
}

/// Two-state process with memory parameter `epsilon`; Markov only at
/// `epsilon = 0`, yet its transition matrices compose.
pub fn appendix_b_joint(epsilon: f64, q: &ProbabilityVector) -> Result<JointProb3> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("memory parameter {epsilon} outside [0, 1]")));
    }
    if q.dim() != 2 {
        return Err(Error::Dimension(format!("initial distribution has {} entries, expected 2", q.dim())));
    }
    let kernel = memory_kernel(epsilon);
    let mut table = [[[0.0; 2]; 2]; 2];
    for j3 in 0..2 {
        for j2 in 0..2 {
            for j1 in 0..2 {
                table[j3][j2][j1] = q.0[j1] * kernel[j3][j2][j1];
            }
        }
    }
    Ok(JointProb3 { table, kernel, epsilon, q: q.clone() })
}

impl JointProb3 {
    pub fn get(&self, j3: usize, j2: usize, j1: usize) -> f64 {
        self.table[j3][j2][j1]
    }

    pub fn total(&self) -> f64 {
        self.table.iter().flatten().flatten().sum()
    }

    /// `p(j3 | j2, j1)`; `None` when the history `(j2, j1)` cannot occur.
    pub fn conditional(&self, j3: usize, j2: usize, j1: usize) -> Option<f64> {
        let norm = self.kernel[0][j2][j1] + self.kernel[1][j2][j1];
        (norm > 0.0).then(|| self.kernel[j3][j2][j1] / norm)
    }

    /// One-point distribution at the second time.
    pub fn marginal_second(&self) -> [f64; 2] {
        let mut m = [0.0; 2];
        for j3 in 0..2 {
            for j2 in 0..2 {
                for j1 in 0..2 {
                    m[j2] += self.table[j3][j2][j1];
                }
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub struct AppendixBReport {
    pub t21: ComplexMatrix,
    pub t32: ComplexMatrix,
    pub t31: ComplexMatrix,
    pub ck_residual: f64,
    pub ck_holds: bool,
    pub markov_residual: f64,
    pub markov_holds: bool,
}

pub fn appendix_b_analysis(joint: &JointProb3, tol: f64) -> AppendixBReport {
    let k = &joint.kernel;
    let t21 = ComplexMatrix::from_fn(2, 2, |j2, j1| Complex64::new(k[0][j2][j1] + k[1][j2][j1], 0.0));
    let t31 = ComplexMatrix::from_fn(2, 2, |j3, j1| Complex64::new(k[j3][0][j1] + k[j3][1][j1], 0.0));

    // p(j3 | j2) from the q-weighted table. A second-time state that q never
    // reaches falls back to a uniform mix of starting states.
    let mut t32 = ComplexMatrix::identity(2);
    for j2 in 0..2 {
        let weighted = |j3: usize| joint.table[j3][j2][0] + joint.table[j3][j2][1];
        let uniform = |j3: usize| k[j3][j2][0] + k[j3][j2][1];
        let (w0, w1) = if weighted(0) + weighted(1) > 0.0 {
            (weighted(0), weighted(1))
        } else {
            (uniform(0), uniform(1))
        };
        if w0 + w1 > 0.0 {
            t32[(0, j2)] = Complex64::new(w0 / (w0 + w1), 0.0);
            t32[(1, j2)] = Complex64::new(w1 / (w0 + w1), 0.0);
        }
    }

    let ck_residual = t31.max_abs_diff(&t32.matmul(&t21));

    let mut markov_residual: f64 = 0.0;
    for j2 in 0..2 {
        for j1 in 0..2 {
            for j3 in 0..2 {
                if let Some(p) = joint.conditional(j3, j2, j1) {
                    markov_residual = markov_residual.max((p - t32[(j3, j2)].re).abs());
                }
            }
        }
    }

    AppendixBReport {
        t21,
        t32,
        t31,
        ck_residual,
        ck_holds: ck_residual <= tol,
        markov_residual,
        markov_holds: markov_residual <= tol,
    }
}
