// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Named verification suites. Each criterion returns one or more checks;
//! the CLI prints them and the acceptance tests assert on them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channels::{self, KrausSet};
use crate::classical::{self, Counterexample3Params, ProbabilityVector, StochasticMatrix};
use crate::divisibility;
use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix};
use crate::representation::{self, ClassSpec, PhaseClass};
use crate::tolerance;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub description: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(criterion: u8, description: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { criterion, description: description.into(), passed, detail: detail.into() }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} [{}] {}: {}", self.criterion, self.description, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Restricts dimension sweeps to one value.
    pub dim: Option<usize>,
    pub seed: u64,
    /// Restricts the memory-parameter sweep to one value.
    pub epsilon: Option<f64>,
    /// Restricts the initial-distribution sweep to one value.
    pub q: Option<ProbabilityVector>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { dim: None, seed: 42, epsilon: None, q: None }
    }
}

impl VerifyOptions {
    fn dims(&self, default: std::ops::RangeInclusive<usize>) -> Vec<usize> {
        match self.dim {
            Some(n) => vec![n],
            None => default.collect(),
        }
    }

    fn rng(&self, criterion: u8) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(criterion as u64))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Lemma3,
    AppendixB,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 7] = ["thm1", "thm2", "thm3", "thm4", "lemma3", "appendix-b", "all"];

    pub fn criteria(self) -> &'static [u8] {
        match self {
            Suite::Thm1 => &[1, 2, 3],
            Suite::Thm2 => &[7, 10],
            Suite::Thm3 => &[5],
            Suite::Thm4 => &[4, 8],
            Suite::Lemma3 => &[6],
            Suite::AppendixB => &[9],
            Suite::All => &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10],
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "thm1" => Suite::Thm1,
            "thm2" => Suite::Thm2,
            "thm3" => Suite::Thm3,
            "thm4" => Suite::Thm4,
            "lemma3" => Suite::Lemma3,
            "appendix-b" => Suite::AppendixB,
            "all" => Suite::All,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown suite '{other}' (expected one of {})",
                    Suite::NAMES.join(", ")
                )))
            }
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = [Suite::Thm1, Suite::Thm2, Suite::Thm3, Suite::Thm4, Suite::Lemma3, Suite::AppendixB, Suite::All]
            .iter()
            .position(|s| s == self)
            .expect("listed");
        f.write_str(Suite::NAMES[i])
    }
}

pub fn run_suite(suite: Suite, opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &c in suite.criteria() {
        out.extend(criterion(c, opts)?);
    }
    Ok(out)
}

/// Short title of each criterion, for report headers.
pub fn title(criterion: u8) -> &'static str {
    match criterion {
        1 => "embedding round trip and identity condition",
        2 => "two-level matrix form pattern",
        3 => "block structure of the matrix form",
        4 => "dichotomic process end to end",
        5 => "uniqueness counterexample roots",
        6 => "replicated operators for equal r and v",
        7 => "admissible class members",
        8 => "P-divisible semigroups give CP-divisible embeddings",
        9 => "P-divisible process with memory",
        10 => "essentially the same class members",
        _ => "unknown criterion",
    }
}

pub fn criterion(c: u8, opts: &VerifyOptions) -> Result<Vec<Check>> {
    match c {
        1 => round_trip(opts),
        2 => two_level_pattern(opts),
        3 => structure(opts),
        4 => dichotomic(),
        5 => uniqueness_roots(),
        6 => replication(opts),
        7 => admissibility(opts),
        8 => semigroups(opts),
        9 => memory_process(opts),
        10 => sameness(opts),
        other => Err(Error::InvalidArgument(format!("criterion {other} does not exist (1..=10)"))),
    }
}

fn round_trip(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = opts.rng(1);
    let mut checks = Vec::new();
    for n in opts.dims(2..=6) {
        let (mut evolve_dev, mut identity_dev) = (0.0f64, 0.0f64);
        for _ in 0..50 {
            let lambda = StochasticMatrix::random(&mut rng, n);
            let rep = representation::build_representation(&lambda);
            identity_dev = identity_dev.max(rep.kraus().identity_defect());
            let p = ProbabilityVector::random(&mut rng, n);
            let out = channels::apply_channel(rep.kraus(), &channels::embed_f(&p))?;
            let q = channels::inverse_f(&out)?;
            evolve_dev = evolve_dev.max(q.max_abs_diff(&classical::evolve(&lambda, &p)?));
        }
        checks.push(Check::new(
            1,
            format!("N = {n}: diagonal action reproduces L p"),
            evolve_dev <= 1e-12,
            format!("max deviation {evolve_dev:.3e} over 50 matrices"),
        ));
        checks.push(Check::new(
            1,
            format!("N = {n}: sum A^dagger A = I"),
            identity_dev <= 1e-12,
            format!("max deviation {identity_dev:.3e}"),
        ));
    }
    Ok(checks)
}

fn two_level_pattern(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = opts.rng(2);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let l = StochasticMatrix::random(&mut rng, 2);
        let g = |j, k| l.get(j, k);
        let r = |x: f64| x.sqrt();
        let pattern = ComplexMatrix::from_real_rows(&[
            [g(0, 0), 0.0, 0.0, g(0, 1)],
            [0.0, r(g(0, 0) * g(1, 1)), r(g(0, 1) * g(1, 0)), 0.0],
            [0.0, r(g(1, 0) * g(0, 1)), r(g(1, 1) * g(0, 0)), 0.0],
            [g(1, 0), 0.0, 0.0, g(1, 1)],
        ]);
        let m = channels::matrix_form(representation::build_representation(&l).kraus());
        worst = worst.max(m.as_matrix().max_abs_diff(&pattern));
    }
    Ok(vec![Check::new(2, "matrix form of 20 random 2x2 matrices", worst <= 1e-14, format!("max deviation {worst:.3e}"))])
}

fn structure(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = opts.rng(3);
    let mut checks = Vec::new();
    let tol = 1e-12;
    for n in opts.dims(2..=6) {
        let g = representation::build_g(n)?;
        let g_sq = g.matmul(&g).max_abs_diff(&g.scale(Complex64::new(n as f64, 0.0)));
        let g_gamma = channels::gamma_reorder(&g)?.max_abs_diff(&g);
        let c_pow = representation::build_c(n)?.powi(n as u32).max_abs_diff(&ComplexMatrix::identity(n));

        let mut covered: Vec<usize> = representation::alpha_partition(n).iter().flat_map(|s| s.as_slice().to_vec()).collect();
        covered.sort_unstable();
        let partition_ok = covered == (0..n * n).collect::<Vec<_>>();

        let lambda = StochasticMatrix::random(&mut rng, n);
        let form = channels::matrix_form(representation::build_representation(&lambda).kraus());
        let off_block = numerics::direct_sum_extract(form.as_matrix(), &representation::alpha_partition(n))?.max_off_block;
        let v0 = representation::v_blocks(&lambda)[0].max_abs_diff(lambda.as_matrix());
        let circ = StochasticMatrix::circulant(&ProbabilityVector::random(&mut rng, n));
        let circ_dev = representation::v_blocks(&circ)
            .iter()
            .map(|v| v.max_abs_diff(circ.as_matrix()))
            .fold(0.0, f64::max);

        let items = [
            ("G^2 = N G", g_sq <= tol, format!("{g_sq:.3e}")),
            ("reshuffle fixes G", g_gamma <= tol, format!("{g_gamma:.3e}")),
            ("C^N = I", c_pow <= tol, format!("{c_pow:.3e}")),
            ("alpha sets partition 0..N^2", partition_ok, format!("{} indices", covered.len())),
            ("off-block entries vanish", off_block < 1e-14, format!("{off_block:.3e}")),
            ("V_0 = L", v0 <= tol, format!("{v0:.3e}")),
            ("circulant L gives equal V_j", circ_dev <= tol, format!("{circ_dev:.3e}")),
        ];
        for (what, ok, detail) in items {
            checks.push(Check::new(3, format!("N = {n}: {what}"), ok, detail));
        }
    }
    Ok(checks)
}

fn dichotomic() -> Result<Vec<Check>> {
    let fam = classical::dichotomic_family(1.0)?;
    let alpha = representation::alpha_partition(2);
    let s_grid: Vec<f64> = (0..20).map(|i| 0.25 * i as f64).collect();
    let offsets = [0.0, 0.1, 0.5, 1.0, 2.0];

    let mut form_dev = 0.0f64;
    let mut inter_dev = 0.0f64;
    for &s in &s_grid {
        for &d in &offsets {
            let t = s + d;
            let lt = fam.evaluate(t)?;
            let mc = divisibility::representation_form(&fam, t)?;
            let split = numerics::direct_sum_extract(mc.as_matrix(), &alpha)?;
            form_dev = form_dev.max(split.max_off_block);
            for b in &split.blocks {
                form_dev = form_dev.max(b.max_abs_diff(lt.as_matrix()));
            }
            let lts = classical::intermediate_matrix(&fam, t, s)?.matrix;
            let m = divisibility::intermediate_channel(&fam, t, s)?;
            let split = numerics::direct_sum_extract(m.as_matrix(), &alpha)?;
            inter_dev = inter_dev.max(split.max_off_block);
            for b in &split.blocks {
                inter_dev = inter_dev.max(b.max_abs_diff(&lts));
            }
        }
    }
    let reports = divisibility::scan(&fam, &s_grid, &offsets)?;
    let all_true = reports.iter().all(|r| r.p_divisible && r.cp_divisible && !r.indeterminate);
    let min_eig = reports.iter().map(|r| r.min_choi_eigenvalue).fold(f64::INFINITY, f64::min);
    Ok(vec![
        Check::new(4, "M_c(t) = L(t) + L(t) on the grid", form_dev <= 1e-12, format!("max deviation {form_dev:.3e}")),
        Check::new(4, "M(t,s) = L(t,s) + L(t,s) on the grid", inter_dev <= 1e-12, format!("max deviation {inter_dev:.3e}")),
        Check::new(
            4,
            "every pair P- and CP-divisible",
            all_true && min_eig >= -1e-10,
            format!("{} pairs, min reshuffled eigenvalue {min_eig:.3e}", reports.len()),
        ),
    ])
}

/// Closed-form root of the first parameter set at unit rate.
pub fn first_set_root() -> f64 {
    (32.0 + (1.0 + 5.0 * 673f64.sqrt()) / 4.0).ln()
}

/// Grid used to search both parameter sets.
pub fn uniqueness_grid() -> Vec<f64> {
    (0..=200).map(|i| 0.05 * i as f64).collect()
}

fn uniqueness_roots() -> Result<Vec<Check>> {
    let first = classical::counterexample3_family(Counterexample3Params::FIRST, 1.0)?;
    let spec4 = ClassSpec::new(PhaseClass::Minus, 1, 1, 4);
    let t_star = first_set_root();
    let member = representation::build_class_member(&spec4, &first.evaluate(t_star)?)?;
    let det = numerics::determinant(channels::matrix_form(&member).as_matrix())?.norm();
    let scan = representation::invertibility_scan(&spec4, &first, &uniqueness_grid())?;
    let brackets = scan.roots.iter().any(|r| r.lo - tolerance::ROOT_WIDTH <= t_star && t_star <= r.hi + tolerance::ROOT_WIDTH);

    let second = classical::counterexample3_family(Counterexample3Params::SECOND, 1.0)?;
    let spec5 = ClassSpec::new(PhaseClass::Minus, 1, 1, 5);
    let scan5 = representation::invertibility_scan(&spec5, &second, &uniqueness_grid())?;
    let inside = scan5.roots.iter().find(|r| !r.near_zero && r.lo > 1.99393180 && r.hi < 1.99393181);
    let roots5: Vec<String> = scan5.roots.iter().map(|r| format!("[{:.10}, {:.10}]", r.lo, r.hi)).collect();

    Ok(vec![
        Check::new(5, format!("first set: |det| at t = {t_star:.11}"), det < 1e-8, format!("|det| = {det:.3e}")),
        Check::new(
            5,
            "first set: scan brackets the closed-form root",
            brackets,
            format!("{} root(s), first at {:?}", scan.roots.len(), scan.roots.first().map(|r| r.midpoint())),
        ),
        Check::new(
            5,
            "second set: root inside (1.99393180, 1.99393181)",
            inside.is_some(),
            format!("roots {}", roots5.join(", ")),
        ),
    ])
}

fn replication(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = opts.rng(6);
    let mut checks = Vec::new();
    for n in opts.dims(2..=4) {
        let lambda = StochasticMatrix::random(&mut rng, n);
        let base = representation::build_representation(&lambda);
        for r in 2..=n {
            let member = representation::build_class_member(&ClassSpec::new(PhaseClass::Minus, r, r, r * n), &lambda)?;
            let scale = Complex64::new(1.0 / (r as f64).sqrt(), 0.0);
            let mut worst = 0.0f64;
            for j in 0..r {
                for s in 0..n {
                    worst = worst.max(member.ops()[n * j + s].max_abs_diff(&base.kraus().ops()[s].scale(scale)));
                }
            }
            checks.push(Check::new(6, format!("N = {n}, r = {r}"), worst <= 1e-15, format!("max deviation {worst:.3e}")));
        }
    }
    Ok(checks)
}

fn admissibility(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = opts.rng(7);
    let mut checks = Vec::new();
    for n in opts.dims(2..=3) {
        let specs = ClassSpec::admissible(n);
        let mut worst = 0.0f64;
        let mut failures = Vec::new();
        for _ in 0..10 {
            let lambda = StochasticMatrix::random(&mut rng, n);
            for spec in &specs {
                let k = KrausSet::from_ops(representation::class_member_ops(spec, &lambda)?)?;
                let cptp = channels::is_cptp(&k);
                worst = worst.max(cptp.max_violation);
                if cptp.max_violation > 1e-12 || !representation::is_essentially_classical(&k, tolerance::PROBABILITY) {
                    failures.push(spec.to_string());
                }
            }
        }
        failures.dedup();
        checks.push(Check::new(
            7,
            format!("N = {n}: {} admissible members CPTP and essentially classical", specs.len()),
            failures.is_empty(),
            if failures.is_empty() { format!("max identity defect {worst:.3e}") } else { format!("failing: {}", failures.join("; ")) },
        ));
        if n == 3 {
            let id = StochasticMatrix::identity(3);
            let worst_det = specs
                .iter()
                .filter(|s| s.class == PhaseClass::Plus)
                .map(|s| {
                    let m = channels::matrix_form(&representation::build_class_member(s, &id)?);
                    Ok(numerics::determinant(m.as_matrix())?.norm())
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            checks.push(Check::new(
                7,
                "N = 3: plus-class members singular at L = I",
                worst_det < 1e-10,
                format!("max |det| {worst_det:.3e}"),
            ));
        }
    }
    Ok(checks)
}

fn semigroups(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = opts.rng(8);
    let dims = opts.dims(2..=3);
    let per_dim = 100 / dims.len();
    let mut checks = Vec::new();
    for n in dims {
        let (mut tested, mut violations, mut worst) = (0usize, 0usize, f64::INFINITY);
        let mut example = None;
        for _ in 0..per_dim {
            let w = classical::random_generator(&mut rng, n, 1.0);
            let fam = classical::semigroup_family(w)?;
            for _ in 0..5 {
                let s = rng.gen_range(0.0..2.0);
                let t = s + rng.gen_range(0.0..2.0);
                let r = divisibility::assess(&fam, t, s)?;
                if r.indeterminate || !r.p_divisible {
                    continue;
                }
                tested += 1;
                worst = worst.min(r.min_choi_eigenvalue);
                if !(r.min_choi_eigenvalue >= -tolerance::psd(n)) {
                    violations += 1;
                    example.get_or_insert((t, s, r.min_choi_eigenvalue));
                }
            }
        }
        let detail = match example {
            None => format!("{tested} P-divisible pairs, min reshuffled eigenvalue {worst:.3e}"),
            Some((t, s, e)) => format!(
                "{violations} of {tested} P-divisible pairs not CP; min eigenvalue {worst:.3e}; first at t = {t:.4}, s = {s:.4} ({e:.3e})"
            ),
        };
        checks.push(Check::new(8, format!("N = {n}: {per_dim} random semigroups"), violations == 0, detail));
    }
    Ok(checks)
}

fn memory_process(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let epsilons: Vec<f64> = match opts.epsilon {
        Some(e) => vec![e],
        None => (0..=10).map(|i| i as f64 / 10.0).collect(),
    };
    let qs = match &opts.q {
        Some(q) => vec![q.clone()],
        None => vec![ProbabilityVector::basis(2, 0), ProbabilityVector::uniform(2)],
    };
    let mut checks = Vec::new();
    for q in &qs {
        let mut problems = Vec::new();
        for &eps in &epsilons {
            let joint = classical::appendix_b_joint(eps, q)?;
            let report = classical::appendix_b_analysis(&joint, 1e-12);
            if (joint.total() - 1.0).abs() > 1e-14 {
                problems.push(format!("eps {eps}: table sums to {}", joint.total()));
            }
            if !report.ck_holds {
                problems.push(format!("eps {eps}: composition residual {:.3e}", report.ck_residual));
            }
            if report.markov_holds != (eps <= 1e-12) {
                problems.push(format!("eps {eps}: Markov verdict {} (residual {:.3e})", report.markov_holds, report.markov_residual));
            }
            if q.as_slice() == [1.0, 0.0] {
                let a = joint.conditional(1, 1, 0).unwrap_or(f64::NAN);
                let b = joint.conditional(1, 1, 1).unwrap_or(f64::NAN);
                if !((a - b - eps).abs() <= 1e-12) {
                    problems.push(format!("eps {eps}: conditional gap {} != eps", a - b));
                }
            }
        }
        checks.push(Check::new(
            9,
            format!("q = ({}, {}), {} values of eps", q.as_slice()[0], q.as_slice()[1], epsilons.len()),
            problems.is_empty(),
            if problems.is_empty() { "normalization, composition and Markov verdicts as expected".to_string() } else { problems.join("; ") },
        ));
    }
    Ok(checks)
}

fn sameness(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut rng = opts.rng(10);
    let a = ClassSpec::new(PhaseClass::Minus, 3, 1, 4);
    let b = ClassSpec::new(PhaseClass::Minus, 2, 1, 3);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let lambda = StochasticMatrix::random(&mut rng, 2);
        let fa = channels::matrix_form(&representation::build_class_member(&a, &lambda)?);
        let fb = channels::matrix_form(&representation::build_class_member(&b, &lambda)?);
        worst = worst.max(fa.as_matrix().max_abs_diff(fb.as_matrix()));
    }
    Ok(vec![Check::new(10, format!("N = 2: {a} vs {b}"), worst <= 1e-12, format!("max deviation {worst:.3e}"))])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for name in Suite::NAMES {
            assert_eq!(name.parse::<Suite>().unwrap().to_string(), name);
        }
        assert!("thm9".parse::<Suite>().is_err());
    }

    #[test]
    fn restricted_dimension() {
        let opts = VerifyOptions { dim: Some(4), seed: 7, ..Default::default() };
        let checks = run_suite(Suite::Thm1, &opts).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
        assert!(checks.iter().filter(|c| c.criterion == 1).all(|c| c.description.starts_with("N = 4")));
    }

    #[test]
    fn memory_process_single_point() {
        let opts = VerifyOptions { epsilon: Some(0.0), q: Some(ProbabilityVector::uniform(2)), ..Default::default() };
        let checks = run_suite(Suite::AppendixB, &opts).unwrap();
        assert_eq!(checks.len(), 1);
        assert!(checks[0].passed);
    }

    #[test]
    fn unknown_criterion() {
        assert!(criterion(11, &VerifyOptions::default()).is_err());
    }
}
