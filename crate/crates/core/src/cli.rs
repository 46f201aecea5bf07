// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input, 3 when a verdict is
//! indeterminate or a verification check fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channels;
use crate::classical::{self, Counterexample3Params, ProbabilityVector, StochasticMatrix, TimeFamily};
use crate::divisibility;
use crate::error::{Error, Result};
use crate::format;
use crate::numerics::{self, ComplexMatrix};
use crate::representation::{self, ClassSpec, PhaseClass};
use crate::tolerance;
use crate::verify::{self, Suite, VerifyOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INVALID: u8 = 2;
pub const EXIT_INDETERMINATE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "kraus-embed", version, about = "Quantum embeddings of stochastic matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build the Kraus representation of a stochastic matrix file.
    Embed(EmbedArgs),
    /// Scan a time family for P- and CP-divisibility.
    Analyze(AnalyzeArgs),
    /// Run a named verification suite.
    Verify(VerifyArgs),
    /// Walk through a worked example.
    Demo(DemoArgs),
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    /// JSON matrix file holding a column-stochastic matrix.
    pub input: PathBuf,
    /// Output directory for kraus.json, matrix_form.json and report.txt;
    /// the report goes to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Build a class member instead, e.g. "class:2 r:2 v:1 M:3".
    #[arg(long)]
    pub class: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FamilyId {
    Dichotomic,
    Oscillatory,
    Counterexample3,
    Semigroup,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long, value_enum)]
    pub family: FamilyId,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Parameter set of the three-level family (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub set: u32,
    /// Grid of intermediate times `s` as start:stop:step.
    #[arg(long)]
    pub t: String,
    /// Offsets `t - s`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub offset: Vec<f64>,
    /// Dimension of the random semigroup family.
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Tolerance on the smallest reshuffled eigenvalue (default 1e-9 N).
    #[arg(long)]
    pub tol: Option<f64>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// One of thm1, thm2, thm3, thm4, lemma3, appendix-b, all.
    pub suite: String,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Initial distribution, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DemoId {
    Dichotomic,
    #[value(name = "appendix-b")]
    AppendixB,
    Counterexample3,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(value_enum)]
    pub name: DemoId,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// A time, or a start:stop:step grid for the determinant trace.
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long, default_value_t = 0.3)]
    pub epsilon: f64,
    #[arg(long, value_delimiter = ',')]
    pub q: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub set: u32,
    /// Tolerance for the composition and Markov tests.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// `start:stop:step`, inclusive of `stop` within half a step, or a single
/// number.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| Error::InvalidArgument(format!("time grid '{spec}': {why}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad("expected numbers")))
        .collect::<Result<Vec<f64>>>()?;
    if nums.iter().any(|x| !x.is_finite()) {
        return Err(bad("values must be finite"));
    }
    match nums.as_slice() {
        [t] => Ok(vec![*t]),
        [start, stop, step] => {
            if !(*step > 0.0) {
                return Err(bad("step must be positive"));
            }
            if stop < start {
                return Err(bad("empty grid (stop precedes start)"));
            }
            let count = ((stop - start) / step + 0.5).floor() as usize;
            Ok((0..=count).map(|i| start + step * i as f64).collect())
        }
        _ => Err(bad("expected start:stop:step")),
    }
}

fn parse_q(q: &Option<Vec<f64>>) -> Result<Option<ProbabilityVector>> {
    q.as_ref().map(|v| ProbabilityVector::new(v.clone())).transpose()
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Singular { .. } | Error::Convergence { .. } | Error::Consistency(_) => EXIT_INDETERMINATE,
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (program name first) and runs the command. Data goes to
/// `out` or to files, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
                return EXIT_OK;
            }
            let _ = write!(err, "{text}");
            return EXIT_INVALID;
        }
    };
    let result = match cli.command {
        Command::Embed(a) => cmd_embed(&a, out, err),
        Command::Analyze(a) => cmd_analyze(&a, out, err),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Demo(a) => cmd_demo(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code_for(&e)
        }
    }
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fmt_complex(z: Complex64) -> String {
    if z.im.abs() < 5e-13 {
        format!("{:>12.8}", z.re)
    } else {
        format!("{:>12.8}{:+.8}i", z.re, z.im)
    }
}

fn fmt_matrix(m: &ComplexMatrix, indent: &str) -> String {
    let mut s = String::new();
    for j in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|k| fmt_complex(m[(j, k)])).collect();
        let _ = writeln!(s, "{indent}{}", row.join(" "));
    }
    s
}

fn section(s: &mut String, title: &str) {
    let _ = writeln!(s, "\n## {title}");
}

fn cmd_embed(a: &EmbedArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let raw = format::read_matrix(&a.input)?;
    let lambda = StochasticMatrix::new(raw)?;
    let n = lambda.dim();
    if n < 2 {
        return Err(Error::InvalidArgument("embedding needs N >= 2".into()));
    }
    let spec = match &a.class {
        Some(text) => text.parse::<ClassSpec>()?,
        None => ClassSpec::representation(n),
    };
    let built = representation::build_class_member(&spec, &lambda)?;

    let mut report = String::new();
    let _ = writeln!(report, "# embedding of a {n}x{n} stochastic matrix ({spec})");
    section(&mut report, "input");
    report.push_str(&fmt_matrix(lambda.as_matrix(), "  "));

    let kraus = match representation::repair_dependence(&built) {
        Ok(k) => {
            let _ = writeln!(report, "\n{} operators built, {} after merging proportional copies", built.len(), k.len());
            k
        }
        Err(e) => {
            let _ = writeln!(err, "warning: {e}; keeping the operators as built");
            let _ = writeln!(report, "\n{} operators built; dependence left unrepaired: {e}", built.len());
            built.clone()
        }
    };
    section(&mut report, "Kraus operators");
    for (s, op) in kraus.ops().iter().enumerate() {
        let _ = writeln!(report, "  operator {s}:");
        report.push_str(&fmt_matrix(op, "    "));
    }
    let cptp = channels::is_cptp(&kraus);
    let _ = writeln!(report, "  identity condition defect {:.3e} ({})", cptp.max_violation, if cptp.passed { "ok" } else { "violated" });
    let classical_check = representation::classicality(&kraus, tolerance::PROBABILITY);
    let _ = writeln!(
        report,
        "  essentially classical: {} (diagonal leak {:.3e}, dephasing defect {:.3e})",
        classical_check.essentially_classical, classical_check.diagonal_leak, classical_check.dephasing_defect
    );

    let form = channels::matrix_form(&kraus);
    section(&mut report, "matrix form");
    report.push_str(&fmt_matrix(form.as_matrix(), "  "));

    if spec == ClassSpec::representation(n) {
        section(&mut report, "alpha blocks and V blocks");
        let sets = representation::alpha_partition(n);
        let split = numerics::direct_sum_extract(form.as_matrix(), &sets)?;
        let v = representation::v_blocks(&lambda);
        for (c, (set, block)) in sets.iter().zip(&split.blocks).enumerate() {
            let j = (n - c) % n;
            let dev = block.max_abs_diff(&v[j]);
            let _ = writeln!(report, "  alpha_{c} = {:?} carries V_{j} (deviation {dev:.3e}):", set.as_slice());
            report.push_str(&fmt_matrix(block, "    "));
        }
        let _ = writeln!(report, "  largest entry outside the blocks {:.3e}", split.max_off_block);
    }

    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            format::write_matrices(&dir.join("kraus.json"), kraus.ops())?;
            format::write_matrix(&dir.join("matrix_form.json"), form.as_matrix())?;
            fs::write(dir.join("report.txt"), &report)?;
        }
        None => out.write_all(report.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn build_family(a: &AnalyzeArgs) -> Result<TimeFamily> {
    match a.family {
        FamilyId::Dichotomic => classical::dichotomic_family(a.gamma),
        FamilyId::Oscillatory => classical::oscillatory_family(a.gamma),
        FamilyId::Counterexample3 => classical::counterexample3_family(Counterexample3Params::set(a.set)?, a.gamma),
        FamilyId::Semigroup => {
            if a.dim < 2 {
                return Err(Error::InvalidArgument("semigroup family needs --dim >= 2".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let w = classical::random_generator(&mut rng, a.dim, a.gamma);
            classical::semigroup_family(w)
        }
    }
}

fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<u8> {
    let fam = build_family(a)?;
    let grid = parse_grid(&a.t)?;
    if a.offset.is_empty() {
        return Err(Error::InvalidArgument("at least one offset is required".into()));
    }
    let mut reports = divisibility::scan(&fam, &grid, &a.offset)?;
    if let Some(tol) = a.tol {
        for r in reports.iter_mut().filter(|r| !r.indeterminate && !r.min_choi_eigenvalue.is_nan()) {
            r.cp_divisible = r.min_choi_eigenvalue >= -tol;
        }
    }
    let mut buf = Vec::new();
    divisibility::write_csv(&mut buf, &reports)?;
    emit(a.out.as_deref(), std::str::from_utf8(&buf).expect("ascii table"), out)?;

    let indeterminate = reports.iter().filter(|r| r.indeterminate).count();
    let p_only = reports.iter().filter(|r| r.p_without_cp()).count();
    let _ = writeln!(
        err,
        "{}: {} pairs, {} P-divisible, {} CP-divisible, {indeterminate} indeterminate, {p_only} P-divisible but not CP",
        fam.id(),
        reports.len(),
        reports.iter().filter(|r| !r.indeterminate && r.p_divisible).count(),
        reports.iter().filter(|r| !r.indeterminate && r.cp_divisible).count(),
    );
    Ok(if indeterminate > 0 { EXIT_INDETERMINATE } else { EXIT_OK })
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<u8> {
    let suite: Suite = a.suite.parse()?;
    let opts = VerifyOptions { dim: a.dim, seed: a.seed, epsilon: a.epsilon, q: parse_q(&a.q)? };
    if let Some(n) = opts.dim {
        if n < 2 {
            return Err(Error::InvalidArgument("--dim must be at least 2".into()));
        }
    }
    if let Some(e) = opts.epsilon {
        if !(0.0..=1.0).contains(&e) {
            return Err(Error::InvalidArgument(format!("--epsilon {e} outside [0, 1]")));
        }
    }
    let mut text = String::new();
    let _ = writeln!(text, "# verification suite {suite} (seed {})", opts.seed);
    let mut all = true;
    for &c in suite.criteria() {
        let _ = writeln!(text, "\n## criterion {c}: {}", verify::title(c));
        for check in verify::criterion(c, &opts)? {
            all &= check.passed;
            let _ = writeln!(text, "{check}");
        }
    }
    let _ = writeln!(text, "\n{}", if all { "all checks passed" } else { "some checks failed" });
    emit(a.out.as_deref(), &text, out)?;
    Ok(if all { EXIT_OK } else { EXIT_INDETERMINATE })
}

fn cmd_demo(a: &DemoArgs, out: &mut dyn Write) -> Result<u8> {
    let text = match a.name {
        DemoId::Dichotomic => demo_dichotomic(a)?,
        DemoId::AppendixB => demo_memory(a)?,
        DemoId::Counterexample3 => demo_counterexample(a)?,
    };
    emit(a.out.as_deref(), &text, out)?;
    Ok(EXIT_OK)
}

fn single_time(a: &DemoArgs, default: f64) -> Result<f64> {
    match &a.t {
        None => Ok(default),
        Some(s) => match parse_grid(s)?.as_slice() {
            [t] => Ok(*t),
            _ => Err(Error::InvalidArgument("this demo takes a single time".into())),
        },
    }
}

fn demo_dichotomic(a: &DemoArgs) -> Result<String> {
    let t = single_time(a, 1.0)?;
    let fam = classical::dichotomic_family(a.gamma)?;
    let lambda = fam.evaluate(t)?;
    let rep = representation::build_representation(&lambda);
    let mut s = String::new();
    let _ = writeln!(s, "# symmetric dichotomic process, gamma = {}, t = {t}", a.gamma);

    section(&mut s, "transition matrix L(t)");
    s.push_str(&fmt_matrix(lambda.as_matrix(), "  "));

    section(&mut s, "Kraus pair");
    let (ch, sh) = ((a.gamma * t).cosh().sqrt(), (a.gamma * t).sinh().sqrt());
    let pre = (-a.gamma * t / 2.0).exp() / 2f64.sqrt();
    let _ = writeln!(s, "  closed form: exp(-gamma t / 2)/sqrt(2) [[c, +-s], [+-s, c]], c = sqrt(cosh), s = sqrt(sinh)");
    for (i, op) in rep.kraus().ops().iter().enumerate() {
        let sign = if i == 0 { 1.0 } else { -1.0 };
        let closed = ComplexMatrix::from_real_rows(&[[pre * ch, sign * pre * sh], [sign * pre * sh, pre * ch]]);
        let _ = writeln!(s, "  A_{i} (deviation from closed form {:.3e}):", op.max_abs_diff(&closed));
        s.push_str(&fmt_matrix(op, "    "));
    }

    section(&mut s, "matrix form (direct sum of two copies of L(t) after reordering)");
    let form = channels::matrix_form(rep.kraus());
    s.push_str(&fmt_matrix(form.as_matrix(), "  "));
    let split = numerics::direct_sum_extract(form.as_matrix(), &representation::alpha_partition(2))?;
    for (c, b) in split.blocks.iter().enumerate() {
        let _ = writeln!(s, "  alpha_{c} block deviation from L(t): {:.3e}", b.max_abs_diff(lambda.as_matrix()));
    }

    section(&mut s, "divisibility verdicts");
    for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let sv = t * frac;
        let r = divisibility::assess(&fam, t, sv)?;
        let _ = writeln!(
            s,
            "  (t, s) = ({t:.4}, {sv:.4}): P-divisible {}, CP-divisible {}, min reshuffled eigenvalue {:.3e}",
            r.p_divisible, r.cp_divisible, r.min_choi_eigenvalue
        );
    }
    Ok(s)
}

fn demo_memory(a: &DemoArgs) -> Result<String> {
    let q = parse_q(&a.q)?.unwrap_or_else(|| ProbabilityVector::basis(2, 0));
    let joint = classical::appendix_b_joint(a.epsilon, &q)?;
    let report = classical::appendix_b_analysis(&joint, a.tol);
    let mut s = String::new();
    let _ = writeln!(s, "# two-state process with memory, eps = {}, q = {:?}", a.epsilon, q.as_slice());

    section(&mut s, "joint distribution p(j3, j2, j1)");
    for j1 in 0..2 {
        for j2 in 0..2 {
            for j3 in 0..2 {
                let _ = writeln!(s, "  p({j3}, {j2}, {j1}) = {:.6}", joint.get(j3, j2, j1));
            }
        }
    }
    let _ = writeln!(s, "  total {:.15}", joint.total());

    section(&mut s, "transition matrices");
    for (name, m) in [("T(t2, t1)", &report.t21), ("T(t3, t2)", &report.t32), ("T(t3, t1)", &report.t31)] {
        let _ = writeln!(s, "  {name}:");
        s.push_str(&fmt_matrix(m, "    "));
    }

    section(&mut s, "conditionals p(1 | j2 = 1, j1)");
    for j1 in 0..2 {
        match joint.conditional(1, 1, j1) {
            Some(p) => {
                let _ = writeln!(s, "  j1 = {j1}: {p:.6}");
            }
            None => {
                let _ = writeln!(s, "  j1 = {j1}: history impossible");
            }
        }
    }

    section(&mut s, "verdicts");
    let verdict = |ok: bool| if ok { "holds" } else { "fails" };
    let _ = writeln!(s, "  composition T(t3,t1) = T(t3,t2) T(t2,t1): {} (residual {:.3e})", verdict(report.ck_holds), report.ck_residual);
    let _ = writeln!(s, "  Markov condition: {} (residual {:.3e})", verdict(report.markov_holds), report.markov_residual);
    Ok(s)
}

fn demo_counterexample(a: &DemoArgs) -> Result<String> {
    let params = Counterexample3Params::set(a.set)?;
    let fam = classical::counterexample3_family(params, a.gamma)?;
    let spec = ClassSpec::new(PhaseClass::Minus, 1, 1, if a.set == 1 { 4 } else { 5 });
    let grid = match &a.t {
        Some(g) => parse_grid(g)?,
        None => (0..=40).map(|i| 0.25 * i as f64 / a.gamma).collect(),
    };
    let scan = representation::invertibility_scan(&spec, &fam, &grid)?;
    let mut s = String::new();
    let _ = writeln!(s, "# three-level family, parameter set {}, gamma = {}, member {spec}", a.set, a.gamma);
    let _ = writeln!(
        s,
        "  a = {}, b = {}, c = {}, d = {}, e = {}, f = {}; x = {}, y = {}, z = {}",
        params.a, params.b, params.c, params.d, params.e, params.f, params.x(), params.y(), params.z()
    );

    section(&mut s, "structural blocks");
    for (b, set) in scan.blocks.iter().enumerate() {
        let _ = writeln!(s, "  block {b}: {:?}", set.as_slice());
    }

    section(&mut s, "determinant trace");
    let _ = writeln!(s, "  {:>10} {:>24} {:>18}", "t", "det (matrix form)", "det L(t)");
    for (i, &t) in scan.times.iter().enumerate() {
        let dl = numerics::determinant(fam.evaluate(t)?.as_matrix())?.re;
        let _ = writeln!(s, "  {t:>10.4} {:>24.12e} {dl:>18.10e}", scan.dets[i].re);
    }

    section(&mut s, "roots");
    if scan.roots.is_empty() {
        let _ = writeln!(s, "  none on this grid");
    }
    for r in &scan.roots {
        let how = if r.near_zero { "near-zero value" } else { "sign change" };
        let _ = writeln!(s, "  block {}: t in [{:.10}, {:.10}] ({how})", r.block, r.lo, r.hi);
    }
    if a.set == 1 {
        let _ = writeln!(s, "  closed form ln(32 + (1 + 5 sqrt 673)/4) / gamma = {:.10}", verify::first_set_root() / a.gamma);
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        // stop within half a step is included
        assert_eq!(parse_grid("0:1.1:0.25").unwrap().len(), 5);
        assert_eq!(parse_grid("0:1.2:0.25").unwrap().len(), 6);
        assert_eq!(parse_grid("2.5").unwrap(), vec![2.5]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(exit_code_for(&Error::Domain("x".into())), EXIT_INVALID);
        assert_eq!(exit_code_for(&Error::Singular { det_abs: 0.0, condition: f64::INFINITY }), EXIT_INDETERMINATE);
    }
}
