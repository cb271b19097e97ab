//! Fast invariant suites behind `rscavity selftest`: one named check per
//! module-level property, sized to finish in seconds. Exit code 4 when any
//! check fails.

use rscavity::error::Result;
use rscavity::popdyn::{self, Population};
use rscavity::pulp::{self, ClosureOutcome};
use rscavity::rng::Rng;
use rscavity::thresholds;
use rscavity::uniqueness::{self, EtaBoundary};
use rscavity::{exact, gen};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn pass(name: &'static str, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            passed: true,
            detail: detail.into(),
        }
    }

    fn fail(name: &'static str, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name,
            passed: false,
            detail: detail.into(),
        }
    }
}

/// Reference threshold table (k, giant, ms, con, pure) the solvers must
/// reproduce to four decimals.
pub const REFERENCE_TABLE: &[(usize, f64, f64, f64, f64)] = &[
    (2, 1.0000, 1.1625, 2.0000, 2.0000),
    (3, 0.5000, 0.8792, 1.3431, 4.9108),
    (4, 0.3333, 0.8695, 1.2451, 6.1782),
    (5, 0.2500, 0.9236, 1.2635, 7.0178),
];

/// Threshold solvers against a reference table; exposed with the table as a
/// parameter so fault-injection tests can corrupt a constant and watch the
/// check name the invariant.
pub fn check_threshold_table(table: &[(usize, f64, f64, f64, f64)]) -> CheckOutcome {
    const NAME: &str = "threshold-table";
    for &(k, giant, ms, con, pure) in table {
        let checks = [
            ("d_giant", thresholds::d_giant(k), giant),
            (
                "d_ms",
                thresholds::d_ms(k).map(|r| r.value).unwrap_or(f64::NAN),
                ms,
            ),
            (
                "d_con",
                thresholds::d_con(k).map(|r| r.value).unwrap_or(f64::NAN),
                con,
            ),
            (
                "d_pure",
                thresholds::d_pure(k).map(|r| r.value).unwrap_or(f64::NAN),
                pure,
            ),
        ];
        for (what, got, want) in checks {
            let off = (got - want).abs();
            if off.is_nan() || off >= 5e-5 {
                return CheckOutcome::fail(
                    NAME,
                    format!("{what}({k}) = {got} but reference says {want}"),
                );
            }
        }
    }
    CheckOutcome::pass(NAME, format!("{} rows agree to 4 decimals", table.len()))
}

fn check_threshold_identities() -> CheckOutcome {
    const NAME: &str = "threshold-identities";
    let con2 = thresholds::d_con(2).map(|r| r.value).unwrap_or(f64::NAN);
    let pure2 = thresholds::d_pure(2).map(|r| r.value).unwrap_or(f64::NAN);
    if (con2 - 2.0).abs() > 1e-9 || (pure2 - 2.0).abs() > 1e-9 {
        return CheckOutcome::fail(NAME, format!("d_con(2)={con2}, d_pure(2)={pure2}"));
    }
    for k in 2..=12 {
        let ms = thresholds::d_ms(k).map(|r| r.value).unwrap_or(f64::NAN);
        let con = thresholds::d_con(k).map(|r| r.value).unwrap_or(f64::NAN);
        if ms.is_nan() || con.is_nan() || ms >= con {
            return CheckOutcome::fail(NAME, format!("d_ms({k})={ms} !< d_con({k})={con}"));
        }
    }
    CheckOutcome::pass(NAME, "k=2 identities and d_ms < d_con for k=2..12")
}

fn check_count_oracle(seed: u64) -> Result<CheckOutcome> {
    const NAME: &str = "count-oracle";
    for i in 0..50u64 {
        let n = 4 + (i % 9) as u32;
        let f = gen::sample_formula(1.0 + (i % 3) as f64 * 0.3, 3, n.max(3), seed ^ i)?;
        let fast = exact::count(&f)?;
        // Direct enumeration, no component decomposition.
        let mut slow = 0u64;
        for bits in 0u64..1 << f.num_vars() {
            let assignment: Vec<i8> = (0..f.num_vars())
                .map(|v| if bits >> v & 1 == 1 { 1 } else { -1 })
                .collect();
            if f.satisfied_by(&assignment) {
                slow += 1;
            }
        }
        if fast.count.to_string() != slow.to_string() {
            return Ok(CheckOutcome::fail(
                NAME,
                format!(
                    "component count {} != enumeration {slow} (case {i})",
                    fast.count
                ),
            ));
        }
    }
    Ok(CheckOutcome::pass(
        NAME,
        "50 formulas agree with enumeration",
    ))
}

fn check_tree_bp_exactness(seed: u64) -> Result<CheckOutcome> {
    const NAME: &str = "tree-bp-exactness";
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let tree =
            gen::sample_gw_tree(1.0 + (i % 2) as f64 * 0.5, 3, 1 + (i % 3) as u32, seed ^ i)?;
        let theta = uniqueness::eta_tree(&tree, EtaBoundary::Zero)?;
        let table = exact::tree_count(&tree, None)?;
        worst = worst.max((uniqueness::gamma(theta.root) - table.root_marginal()).abs());
    }
    if worst < 1e-10 {
        Ok(CheckOutcome::pass(
            NAME,
            format!("worst deviation {worst:.2e}"),
        ))
    } else {
        Ok(CheckOutcome::fail(
            NAME,
            format!("deviation {worst:.2e} exceeds 1e-10"),
        ))
    }
}

fn check_pulp_closure_bound(seed: u64) -> Result<CheckOutcome> {
    const NAME: &str = "pulp-closure-bound";
    use rscavity::exact::BigUint;
    for i in 0..30u64 {
        let f = gen::sample_formula(1.2, 3, 16, seed ^ (i << 8))?;
        let initial = [
            rscavity::cnf::Literal::positive(1),
            rscavity::cnf::Literal::negative(2),
        ];
        let result = pulp::pulp(&f, &initial, None)?;
        if let ClosureOutcome::Closure(lits) = &result.outcome {
            if !pulp::verify_closure(&f, &initial, lits) {
                return Ok(CheckOutcome::fail(
                    NAME,
                    format!("closure fails PULP1-2 (case {i})"),
                ));
            }
            let z = exact::count(&f)?;
            let z_cond = exact::count_conditioned(&f, &initial)?;
            let bound = (BigUint::from(1u32) << lits.len()) * z_cond.count;
            if z.count > bound {
                return Ok(CheckOutcome::fail(
                    NAME,
                    format!("Z = {} > 2^|L| Z(L) = {bound} (case {i})", z.count),
                ));
            }
        }
    }
    Ok(CheckOutcome::pass(
        NAME,
        "30 closures verified with the counting bound",
    ))
}

fn check_bethe_zero_density(seed: u64) -> Result<CheckOutcome> {
    const NAME: &str = "bethe-zero-density";
    let pop = Population::delta_half(1000);
    let est = popdyn::bethe(&pop, 0.0, 3, 10_000, seed)?;
    if (est.value - 2f64.ln()).abs() < 1e-12 {
        Ok(CheckOutcome::pass(NAME, format!("value {}", est.value)))
    } else {
        Ok(CheckOutcome::fail(NAME, format!("{} != log 2", est.value)))
    }
}

fn check_bp_symmetry(seed: u64) -> Result<CheckOutcome> {
    const NAME: &str = "bp-flip-symmetry";
    let n = 20_000;
    let out = popdyn::iterate(1.0, 3, n, 5, seed)?.population;
    let dev = (out.mean() - 0.5).abs();
    let tol = 3.0 * 0.5 / (n as f64).sqrt();
    if dev < tol {
        Ok(CheckOutcome::pass(
            NAME,
            format!("mean deviation {dev:.2e}"),
        ))
    } else {
        Ok(CheckOutcome::fail(
            NAME,
            format!("mean deviation {dev:.2e} > {tol:.2e}"),
        ))
    }
}

fn check_height_tail(seed: u64) -> Result<CheckOutcome> {
    const NAME: &str = "height-tail";
    let report = pulp::tree_height_tail_mc(1.0, 3, 2, 4, 5000, seed)?;
    for h in 1..=2u32 {
        let sigma = report.binomial_sigma(h);
        let diff =
            (report.mc_tail[(h - 1) as usize] - report.analytic_tail[(h - 1) as usize]).abs();
        if diff > 5.0 * sigma {
            return Ok(CheckOutcome::fail(
                NAME,
                format!("h={h}: |mc - analytic| = {diff:.4} > 5 sigma"),
            ));
        }
    }
    Ok(CheckOutcome::pass(
        NAME,
        "tail matches analytic iterate within 5 sigma",
    ))
}

fn check_contraction(seed: u64) -> Result<CheckOutcome> {
    const NAME: &str = "contraction";
    let r = uniqueness::contraction_estimate(1.0, 3, 10_000, 3, seed)?;
    if r.max_ratio <= r.constant + 0.05 {
        Ok(CheckOutcome::pass(
            NAME,
            format!(
                "max ratio {:.4} <= c + 0.05 = {:.4}",
                r.max_ratio,
                r.constant + 0.05
            ),
        ))
    } else {
        Ok(CheckOutcome::fail(
            NAME,
            format!(
                "max ratio {:.4} > c + 0.05 = {:.4}",
                r.max_ratio,
                r.constant + 0.05
            ),
        ))
    }
}

fn check_determinism(seed: u64) -> Result<CheckOutcome> {
    const NAME: &str = "determinism";
    let a = popdyn::iterate(1.0, 3, 5000, 5, seed)?.population;
    let b = popdyn::iterate(1.0, 3, 5000, 5, seed)?.population;
    if a == b {
        Ok(CheckOutcome::pass(NAME, "repeated runs are bit-identical"))
    } else {
        Ok(CheckOutcome::fail(NAME, "repeated runs differ"))
    }
}

fn check_rng_streams() -> CheckOutcome {
    const NAME: &str = "rng-streams";
    let root = Rng::new(1234);
    let mut a = root.fork(7);
    let mut b = root.fork(7);
    let mut c = root.fork(8);
    for _ in 0..100 {
        if a.next_u64() != b.next_u64() {
            return CheckOutcome::fail(NAME, "same label diverged");
        }
    }
    if a.next_u64() == c.next_u64() {
        return CheckOutcome::fail(NAME, "distinct labels collided");
    }
    CheckOutcome::pass(NAME, "substreams reproduce and separate")
}

/// Runs every invariant suite. Failures are collected, not short-circuited.
pub fn run_selftest(seed: u64) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        check_threshold_table(REFERENCE_TABLE),
        check_threshold_identities(),
        check_rng_streams(),
        check_count_oracle(seed)?,
        check_tree_bp_exactness(seed)?,
        check_pulp_closure_bound(seed)?,
        check_bethe_zero_density(seed)?,
        check_bp_symmetry(seed)?,
        check_height_tail(seed)?,
        check_contraction(seed)?,
        check_determinism(seed)?,
    ])
}

/// Plain-text report; deterministic given the seed.
pub fn selftest_report(seed: u64) -> Result<(String, bool)> {
    let outcomes = run_selftest(seed)?;
    let mut out = String::new();
    let mut all_ok = true;
    for o in &outcomes {
        all_ok &= o.passed;
        out.push_str(&format!(
            "{} {}: {}\n",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        ));
    }
    out.push_str(&format!(
        "selftest: {}/{} checks passed (digest {})\n",
        outcomes.iter().filter(|o| o.passed).count(),
        outcomes.len(),
        crate::manifest::digest_hex(out.as_bytes()),
    ));
    Ok((out, all_ok))
}
