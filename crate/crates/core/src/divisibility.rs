// Copyright 2026 The kraus-embed Authors
// SPDX-License-Identifier: Apache-2.0

//! Classical P-divisibility against CP-divisibility of the embedded
//! channel.
//!
//! For a time family `L(t)` the embedded channel has matrix form `M_c(t)`,
//! and the intermediate map is `M(t, s) = M_c(t) M_c(s)^-1`. It is CP when
//! the reshuffled `G(M(t, s))` is positive semidefinite.

use std::io::Write;

use rayon::prelude::*;

use crate::channels::{self, ChannelMatrixForm};
use crate::classical::{self, TimeFamily};
use crate::error::{Error, Result};
use crate::numerics::{self, ComplexMatrix};
use crate::representation;
use crate::tolerance;

/// `M_c(t)` of the representation of `L(t)`.
pub fn representation_form(fam: &TimeFamily, t: f64) -> Result<ChannelMatrixForm> {
    let lambda = fam.evaluate(t)?;
    Ok(channels::matrix_form(representation::build_representation(&lambda).kraus()))
}

fn check_times(fam: &TimeFamily, t: f64, s: f64) -> Result<()> {
    if !(t >= s && s >= fam.t1()) {
        return Err(Error::InvalidArgument(format!("need t >= s >= {}, got t = {t}, s = {s}", fam.t1())));
    }
    Ok(())
}

/// `M_c(t) M_c(s)^-1`; `Error::Singular` when `M_c(s)` is near singular.
pub fn intermediate_channel(fam: &TimeFamily, t: f64, s: f64) -> Result<ChannelMatrixForm> {
    check_times(fam, t, s)?;
    let mt = representation_form(fam, t)?;
    let ms = representation_form(fam, s)?;
    let inv = numerics::inverse(ms.as_matrix())?;
    ChannelMatrixForm::new(mt.as_matrix().matmul(&inv))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DivisibilityReport {
    pub t: f64,
    pub s: f64,
    pub p_divisible: bool,
    pub cp_divisible: bool,
    /// Set when `L(s)` or `M_c(s)` could not be inverted reliably; both
    /// verdicts are then `false` and the numeric fields are NaN.
    pub indeterminate: bool,
    pub min_choi_eigenvalue: f64,
    pub min_intermediate_entry: f64,
    pub note: Option<String>,
}

impl DivisibilityReport {
    fn indeterminate(t: f64, s: f64, why: String) -> Self {
        Self {
            t,
            s,
            p_divisible: false,
            cp_divisible: false,
            indeterminate: true,
            min_choi_eigenvalue: f64::NAN,
            min_intermediate_entry: f64::NAN,
            note: Some(why),
        }
    }

    /// A P-divisible step whose embedded intermediate is not CP.
    pub fn p_without_cp(&self) -> bool {
        !self.indeterminate && self.p_divisible && !self.cp_divisible
    }
}

/// Classical and quantum verdicts at one `(t, s)` pair. Singular points
/// come back as indeterminate reports; only bad arguments are errors.
pub fn assess(fam: &TimeFamily, t: f64, s: f64) -> Result<DivisibilityReport> {
    check_times(fam, t, s)?;
    let classical = match classical::intermediate_matrix(fam, t, s) {
        Ok(im) => im,
        Err(e @ Error::Singular { .. }) => return Ok(DivisibilityReport::indeterminate(t, s, e.to_string())),
        Err(e) => return Err(e),
    };
    let form = match intermediate_channel(fam, t, s) {
        Ok(f) => f,
        Err(e @ Error::Singular { .. }) => return Ok(DivisibilityReport::indeterminate(t, s, e.to_string())),
        Err(e) => return Err(e),
    };
    let cp = channels::is_completely_positive(&form, tolerance::psd(form.dim()));
    Ok(DivisibilityReport {
        t,
        s,
        p_divisible: classical.stochastic,
        cp_divisible: cp.passed,
        indeterminate: false,
        min_choi_eigenvalue: cp.min_eigenvalue.unwrap_or(f64::NAN),
        min_intermediate_entry: classical.min_entry,
        note: cp.diagnostic,
    })
}

/// Reports for every `(s + offset, s)` with `s` from `s_grid`, ordered by
/// `s` and then by offset.
pub fn scan(fam: &TimeFamily, s_grid: &[f64], offsets: &[f64]) -> Result<Vec<DivisibilityReport>> {
    if let Some(bad) = offsets.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::InvalidArgument(format!("offset {bad} must be non-negative")));
    }
    if s_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("time grid must be sorted ascending".into()));
    }
    let pairs: Vec<(f64, f64)> = s_grid.iter().flat_map(|&s| offsets.iter().map(move |&d| (s + d, s))).collect();
    pairs.par_iter().map(|&(t, s)| assess(fam, t, s)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceDiagnostics {
    pub trace: f64,
    /// Sum of all entries of `L(t, s)`; `N` when it is stochastic.
    pub expected_trace: f64,
    pub trace_ok: bool,
    /// `max |G(M)[Nj+k, Nj+k] - L[j,k]|`.
    pub diagonal_defect: f64,
    pub diagonal_ok: bool,
}

/// The reshuffled form carries `L(t, s)` on its diagonal, row by row.
pub fn trace_diagnostics(m: &ChannelMatrixForm, lambda_ts: &ComplexMatrix) -> Result<TraceDiagnostics> {
    let n = m.dim();
    if lambda_ts.rows() != n || lambda_ts.cols() != n {
        return Err(Error::Dimension(format!(
            "{}x{} classical matrix for an N = {n} channel",
            lambda_ts.rows(),
            lambda_ts.cols()
        )));
    }
    let g = channels::gamma_reorder(m.as_matrix())?;
    let trace = g.trace().re;
    let expected_trace: f64 = lambda_ts.data().iter().map(|z| z.re).sum();
    let mut diagonal_defect: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            diagonal_defect = diagonal_defect.max((g[(n * j + k, n * j + k)] - lambda_ts[(j, k)]).norm());
        }
    }
    let tol = tolerance::PROBABILITY * lambda_ts.max_abs().max(1.0);
    Ok(TraceDiagnostics {
        trace,
        expected_trace,
        trace_ok: (trace - expected_trace).abs() <= tol * n as f64,
        diagonal_defect,
        diagonal_ok: diagonal_defect <= tol,
    })
}

pub const CSV_HEADER: &str = "t,s,p_divisible,cp_divisible,min_choi_eig,min_intermediate_entry";

fn verdict(flag: bool, indeterminate: bool) -> &'static str {
    match (indeterminate, flag) {
        (true, _) => "indeterminate",
        (false, true) => "true",
        (false, false) => "false",
    }
}

/// One header line, then one row per report. Reals carry 17 significant
/// digits.
pub fn write_csv(out: &mut impl Write, reports: &[DivisibilityReport]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in reports {
        writeln!(
            out,
            "{:.16e},{:.16e},{},{},{:.16e},{:.16e}",
            r.t,
            r.s,
            verdict(r.p_divisible, r.indeterminate),
            verdict(r.cp_divisible, r.indeterminate),
            r.min_choi_eigenvalue,
            r.min_intermediate_entry
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{Counterexample3Params, StochasticMatrix};
    use crate::representation::alpha_partition;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `e^{-x} [[cosh x, sinh x], [sinh x, cosh x]]`
    fn hyperbolic(x: f64) -> ComplexMatrix {
        let e = (-x).exp();
        ComplexMatrix::from_real_rows(&[[e * x.cosh(), e * x.sinh()], [e * x.sinh(), e * x.cosh()]])
    }

    fn grid(count: usize, step: f64) -> Vec<f64> {
        (0..count).map(|i| step * i as f64).collect()
    }

    #[test]
    fn equal_times_give_identity() {
        let fam = classical::dichotomic_family(1.0).unwrap();
        let m = intermediate_channel(&fam, 0.7, 0.7).unwrap();
        assert!(m.as_matrix().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-13);
        let r = assess(&fam, 0.7, 0.7).unwrap();
        assert!(r.p_divisible && r.cp_divisible && r.min_choi_eigenvalue >= -1e-12);
        let d = trace_diagnostics(&m, &ComplexMatrix::identity(2)).unwrap();
        assert!(d.trace_ok && (d.trace - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dichotomic_intermediate_is_doubled_classical() {
        let fam = classical::dichotomic_family(1.0).unwrap();
        for s in grid(6, 0.4) {
            for d in [0.0, 0.3, 1.7] {
                let t = s + d;
                let m = intermediate_channel(&fam, t, s).unwrap();
                let split = numerics::direct_sum_extract(m.as_matrix(), &alpha_partition(2)).unwrap();
                assert!(split.max_off_block < 1e-12);
                for block in &split.blocks {
                    assert!(block.max_abs_diff(&hyperbolic(t - s)) < 1e-12);
                }
                let diag = trace_diagnostics(&m, &hyperbolic(t - s)).unwrap();
                assert!(diag.trace_ok && diag.diagonal_ok);
                // oracle: column sums of the hyperbolic matrix
                assert!((diag.expected_trace - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alpha_zero_block_is_classical_intermediate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in [2, 3, 4] {
            let fam = classical::semigroup_family(classical::random_generator(&mut rng, n, 1.0)).unwrap();
            for (t, s) in [(0.5, 0.2), (2.0, 1.0)] {
                let m = intermediate_channel(&fam, t, s).unwrap();
                let split = numerics::direct_sum_extract(m.as_matrix(), &alpha_partition(n)).unwrap();
                let classical = classical::intermediate_matrix(&fam, t, s).unwrap().matrix;
                assert!(split.blocks[0].max_abs_diff(&classical) < 1e-10);
                assert!(trace_diagnostics(&m, &classical).unwrap().diagonal_ok);
            }
        }
    }

    #[test]
    fn dichotomic_scan_all_true() {
        let fam = classical::dichotomic_family(1.0).unwrap();
        let reports = scan(&fam, &grid(20, 0.25), &[0.0, 0.1, 0.5, 1.0, 2.0]).unwrap();
        assert_eq!(reports.len(), 100);
        for r in &reports {
            // oracle: assess at the same point
            assert_eq!(r, &assess(&fam, r.t, r.s).unwrap());
            assert!(r.p_divisible && r.cp_divisible && !r.indeterminate, "{r:?}");
        }
        assert!(scan(&fam, &[], &[0.5]).unwrap().is_empty());
        assert!(scan(&fam, &[1.0, 0.0], &[0.5]).is_err());
        assert!(scan(&fam, &[0.0], &[-0.5]).is_err());
    }

    #[test]
    fn oscillatory_sign_flip_is_not_p_divisible() {
        let fam = classical::oscillatory_family(1.0).unwrap();
        let r = assess(&fam, 2.0, 1.5).unwrap();
        let q = |t: f64| (-t).exp() * t.cos();
        // oracle: classical entry (1 + q(t)/q(s))/2 is negative
        assert!((1.0 + q(2.0) / q(1.5)) / 2.0 < 0.0);
        assert!(!r.p_divisible && !r.indeterminate);
        assert!((r.min_intermediate_entry - (1.0 + q(2.0) / q(1.5)) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn singular_points_are_indeterminate() {
        let fam = classical::oscillatory_family(1.0).unwrap();
        let r = assess(&fam, 2.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(r.indeterminate && r.min_choi_eigenvalue.is_nan());
        assert!(assess(&fam, 1.0, 2.0).is_err());
    }

    #[test]
    fn first_parameter_set_matches_classical_oracle() {
        let fam = classical::counterexample3_family(Counterexample3Params::FIRST, 1.0).unwrap();
        let reports = scan(&fam, &grid(11, 0.5), &[0.0, 0.25, 1.0]).unwrap();
        for r in &reports {
            let oracle = classical::intermediate_matrix(&fam, r.t, r.s).unwrap();
            assert_eq!(r.p_divisible, oracle.stochastic, "{r:?}");
            assert_eq!(r.min_intermediate_entry, oracle.min_entry);
        }
        // the family is divisible only from its starting point
        assert!(reports.iter().filter(|r| r.t > r.s).all(|r| r.p_divisible == (r.s == 0.0)));
    }

    #[test]
    fn circulant_families_embed_their_intermediates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in [2, 3, 4] {
            // circulant generator: rates depend only on j - k mod n
            let rates: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let w = ComplexMatrix::from_fn(n, n, |j, k| {
                let d = (j + n - k) % n;
                if d == 0 {
                    Complex64::new(-rates[1..].iter().sum::<f64>(), 0.0)
                } else {
                    Complex64::new(rates[d], 0.0)
                }
            });
            let fam = classical::semigroup_family(w).unwrap();
            for (t, s) in [(1.0, 0.5), (3.0, 0.2)] {
                let m = intermediate_channel(&fam, t, s).unwrap();
                let lts = StochasticMatrix::new(classical::intermediate_matrix(&fam, t, s).unwrap().matrix).unwrap();
                let direct = channels::matrix_form(representation::build_representation(&lts).kraus());
                assert!(m.as_matrix().max_abs_diff(direct.as_matrix()) < 1e-10);
                let r = assess(&fam, t, s).unwrap();
                assert!(r.p_divisible && r.cp_divisible, "{r:?}");
            }
        }
    }

    #[test]
    fn non_circulant_semigroup_breaks_cp() {
        let w = ComplexMatrix::from_real_rows(&[[-1.0, 0.5], [1.0, -0.5]]);
        let fam = classical::semigroup_family(w).unwrap();
        let r = assess(&fam, 2.0, 1.0).unwrap();
        assert!(r.p_divisible);
        assert!(!r.cp_divisible);
        assert!(r.min_choi_eigenvalue < -1e-3, "{r:?}");
        assert!(r.p_without_cp());
    }

    #[test]
    fn csv_layout() {
        let fam = classical::dichotomic_family(1.0).unwrap();
        let mut reports = scan(&fam, &[0.0, 0.5], &[0.25]).unwrap();
        reports.push(DivisibilityReport::indeterminate(1.0, 0.5, "singular".into()));
        let mut buf = Vec::new();
        write_csv(&mut buf, &reports).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("2.5000000000000000e-1,0.0000000000000000e0,true,true,"));
        assert!(lines[3].contains("indeterminate,indeterminate,NaN,NaN"));
        let fields: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[4].parse::<f64>().unwrap(), reports[1].min_choi_eigenvalue);
    }

    #[test]
    fn composition_of_intermediates() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fam = classical::semigroup_family(classical::random_generator(&mut rng, 3, 1.0)).unwrap();
        let (t, s, u) = (2.0, 1.1, 0.3);
        let tu = intermediate_channel(&fam, t, u).unwrap();
        let ts = intermediate_channel(&fam, t, s).unwrap();
        let su = intermediate_channel(&fam, s, u).unwrap();
        assert!(tu.as_matrix().max_abs_diff(&ts.as_matrix().matmul(su.as_matrix())) < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn composition_holds_for_random_families(seed in any::<u64>(), n in 2usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let fam = classical::semigroup_family(classical::random_generator(&mut rng, n, 1.0)).unwrap();
            let mut times: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..2.0)).collect();
            times.sort_by(f64::total_cmp);
            let (u, s, t) = (times[0], times[1], times[2]);
            let tu = intermediate_channel(&fam, t, u).unwrap();
            let ts = intermediate_channel(&fam, t, s).unwrap();
            let su = intermediate_channel(&fam, s, u).unwrap();
            prop_assert!(tu.as_matrix().max_abs_diff(&ts.as_matrix().matmul(su.as_matrix())) < 1e-10);
        }

        #[test]
        fn random_theorem_one_channels_pass_trace_diagnostics(seed in any::<u64>(), n in 2usize..6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let lambda = StochasticMatrix::random(&mut rng, n);
            let m = channels::matrix_form(representation::build_representation(&lambda).kraus());
            let d = trace_diagnostics(&m, lambda.as_matrix()).unwrap();
            prop_assert!(d.trace_ok && d.diagonal_ok);
            prop_assert!((d.trace - n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn report_params_survive_family_cloning() {
        let fam = classical::counterexample3_family(Counterexample3Params::SECOND, 1.0).unwrap();
        let copy = fam.clone();
        assert_eq!(copy.params(), fam.params());
        assert_eq!(assess(&copy, 1.0, 0.5).unwrap(), assess(&fam, 1.0, 0.5).unwrap());
    }
}
