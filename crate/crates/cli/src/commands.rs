//! The experiment commands behind each CLI subcommand. Every function
//! returns its output as a string (or raw bytes) so callers, the binary and
//! the test suites, can route or compare them byte for byte.

use std::path::Path;

use serde::Serialize;
use serde_json::json;

use rscavity::cnf::{read_dimacs_file, DimacsMode, Literal};
use rscavity::error::{Error, Result};
use rscavity::popdyn::{self, Population, Support};
use rscavity::pulp::{self, ClosureOutcome};
use rscavity::thresholds;
use rscavity::uniqueness;
use rscavity::{exact, gen};

use crate::manifest::{csv_with_manifest, RunManifest};

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialises");
    s.push('\n');
    s
}

/// Four-decimal formatting used by the threshold tables.
fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

pub fn thresholds_csv(ks: &[usize]) -> Result<String> {
    let mut out = String::from("k,d_giant,d_ms,d_con,d_pure,d_sat_ref\n");
    for &k in ks {
        let sat = thresholds::d_sat_reference_str(k).unwrap_or_default();
        out.push_str(&format!(
            "{k},{},{},{},{},{}\n",
            fmt4(thresholds::d_giant(k)),
            fmt4(thresholds::d_ms(k)?.value),
            fmt4(thresholds::d_con(k)?.value),
            fmt4(thresholds::d_pure(k)?.value),
            sat
        ));
    }
    Ok(csv_with_manifest(
        "thresholds",
        json!({ "k": ks }),
        None,
        &out,
    ))
}

pub fn thresholds_json(ks: &[usize]) -> Result<String> {
    #[derive(Serialize)]
    struct Row {
        k: usize,
        d_giant: f64,
        d_ms: f64,
        d_con: f64,
        d_pure: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        d_sat_ref: Option<f64>,
        solver_residual_ms: f64,
        solver_residual_con: f64,
    }
    let mut rows = Vec::new();
    for &k in ks {
        let ms = thresholds::d_ms(k)?;
        let con = thresholds::d_con(k)?;
        rows.push(Row {
            k,
            d_giant: thresholds::d_giant(k),
            d_ms: ms.value,
            d_con: con.value,
            d_pure: thresholds::d_pure(k)?.value,
            d_sat_ref: thresholds::d_sat_reference(k),
            solver_residual_ms: ms.residual,
            solver_residual_con: con.residual,
        });
    }
    Ok(to_json(&json!({
        "rows": rows,
        "manifest": RunManifest::new("thresholds", json!({ "k": ks }), None, b""),
    })))
}

/// The threshold table for k = 2..=5, four decimals.
pub fn table1_csv() -> Result<String> {
    thresholds_csv(&[2, 3, 4, 5]).map(|s| {
        s.replace(
            "# manifest: {\"command\":\"thresholds\"",
            "# manifest: {\"command\":\"table1\"",
        )
    })
}

/// One row of the Bethe-vs-moment-bounds sweep.
#[derive(Debug, Clone, Serialize)]
pub struct Figure1Row {
    pub d: f64,
    pub bethe: f64,
    pub bethe_se: f64,
    pub first_moment: f64,
    pub second_moment: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn figure1_rows(
    k: usize,
    d_min: f64,
    d_max: f64,
    step: f64,
    pop: usize,
    iters: u32,
    mc: usize,
    seed: u64,
) -> Result<Vec<Figure1Row>> {
    if step <= 0.0 || d_max < d_min {
        return Err(Error::invalid("need step > 0 and d_max >= d_min"));
    }
    let mut rows = Vec::new();
    let mut i = 0u32;
    loop {
        let d = d_min + step * i as f64;
        if d > d_max + 1e-12 {
            break;
        }
        let (bethe, bethe_se) = if d == 0.0 {
            (2f64.ln(), 0.0)
        } else {
            let result = popdyn::iterate(d, k, pop, iters, seed ^ (i as u64) << 32)?;
            let est = popdyn::bethe(&result.population, d, k, mc, seed ^ 0x42 ^ (i as u64) << 32)?;
            (est.value, est.std_error)
        };
        let mb = thresholds::moment_bounds(d, k)?;
        rows.push(Figure1Row {
            d,
            bethe,
            bethe_se,
            first_moment: mb.first_moment,
            second_moment: mb.second_moment,
        });
        i += 1;
    }
    Ok(rows)
}

#[allow(clippy::too_many_arguments)]
pub fn figure1_csv(
    k: usize,
    d_min: f64,
    d_max: f64,
    step: f64,
    pop: usize,
    iters: u32,
    mc: usize,
    seed: u64,
) -> Result<String> {
    let rows = figure1_rows(k, d_min, d_max, step, pop, iters, mc, seed)?;
    let mut out = String::from("d,bethe,bethe_se,first_moment,second_moment\n");
    for r in rows {
        out.push_str(&format!(
            "{:.6},{},{},{},{}\n",
            r.d, r.bethe, r.bethe_se, r.first_moment, r.second_moment
        ));
    }
    Ok(csv_with_manifest(
        "figure1",
        json!({
            "k": k, "d_min": d_min, "d_max": d_max, "step": step,
            "pop": pop, "iters": iters, "mc": mc,
        }),
        Some(seed),
        &out,
    ))
}

/// Population dynamics dump: raw little-endian f64 samples plus a JSON
/// sidecar describing the run.
pub fn popdyn_run(
    d: f64,
    k: usize,
    pop: usize,
    iters: u32,
    seed: u64,
) -> Result<(Vec<u8>, String)> {
    let result = popdyn::iterate(d, k, pop, iters, seed)?;
    let mut raw = Vec::with_capacity(pop * 8);
    result.population.write_raw(&mut raw)?;
    let sidecar = to_json(&json!({
        "d": d,
        "k": k,
        "pop": pop,
        "iters": iters,
        "w1_trace": result.w1_trace,
        "mean": result.population.mean(),
        "manifest": RunManifest::new(
            "popdyn",
            json!({ "d": d, "k": k, "pop": pop, "iters": iters }),
            Some(seed),
            &raw,
        ),
    }));
    Ok((raw, sidecar))
}

pub fn bethe_from_file(path: &Path, d: f64, k: usize, mc: usize, seed: u64) -> Result<String> {
    let mut file = std::fs::File::open(path)?;
    let pop = Population::read_raw(&mut file, Support::UNIT_OPEN)?;
    bethe_report(&pop, d, k, mc, seed)
}

pub fn bethe_report(pop: &Population, d: f64, k: usize, mc: usize, seed: u64) -> Result<String> {
    let est = popdyn::bethe(pop, d, k, mc, seed)?;
    Ok(to_json(&json!({
        "value": est.value,
        "std_error": est.std_error,
        "variable_term": est.variable_term,
        "clause_term": est.clause_term,
        "mc_samples": est.mc_samples,
        "degenerate_samples": est.degenerate_samples,
        "manifest": RunManifest::new(
            "bethe",
            json!({ "d": d, "k": k, "mc": mc, "pop_size": pop.len() }),
            Some(seed),
            b"",
        ),
    })))
}

pub fn count_cmd(path: &Path, strict: bool) -> Result<String> {
    let mode = if strict {
        DimacsMode::Strict
    } else {
        DimacsMode::Lenient
    };
    let formula = read_dimacs_file(path, mode)?;
    let result = exact::count(&formula)?;
    Ok(to_json(&json!({
        "count": result.count.to_string(),
        "log_count": result.log_count,
        "components": exact::component_sizes(&formula),
        "n": formula.num_vars(),
        "m": formula.num_clauses(),
        "manifest": RunManifest::new(
            "count",
            json!({ "file": path.display().to_string(), "strict": strict }),
            None,
            b"",
        ),
    })))
}

/// Parses `--assume "-1,4"` (ASCII or Unicode minus) into literals.
pub fn parse_assumptions(s: &str) -> Result<Vec<Literal>> {
    let normalized = s.replace('\u{2212}', "-");
    normalized
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let code: i64 = t
                .parse()
                .map_err(|e| Error::invalid(format!("bad literal {t:?}: {e}")))?;
            Literal::from_dimacs(code)
        })
        .collect()
}

pub fn pulp_run_cmd(path: &Path, assume: &str) -> Result<String> {
    let formula = read_dimacs_file(path, DimacsMode::Strict)?;
    let initial = parse_assumptions(assume)?;
    let result = pulp::pulp(&formula, &initial, None)?;
    let (outcome, closure): (&str, Vec<i64>) = match &result.outcome {
        ClosureOutcome::Closure(lits) => ("closure", lits.iter().map(|l| l.to_dimacs()).collect()),
        ClosureOutcome::Contradiction => ("contradiction", Vec::new()),
    };
    let verified = match &result.outcome {
        ClosureOutcome::Closure(lits) => pulp::verify_closure(&formula, &initial, lits),
        ClosureOutcome::Contradiction => true,
    };
    let trace: Vec<serde_json::Value> = result
        .trace
        .iter()
        .map(|(clause, lit)| json!({ "clause": clause, "added": lit.to_dimacs() }))
        .collect();
    Ok(to_json(&json!({
        "outcome": outcome,
        "closure": closure,
        "closure_size": result.reported_size,
        "verified": verified,
        "trace": trace,
        "manifest": RunManifest::new(
            "pulp-run",
            json!({ "file": path.display().to_string(), "assume": assume }),
            None,
            b"",
        ),
    })))
}

pub fn pulp_heights_cmd(path: &Path) -> Result<String> {
    let formula = read_dimacs_file(path, DimacsMode::Strict)?;
    let mut rows = Vec::new();
    for var in 1..=formula.num_vars() {
        let plus = pulp::height(&formula, var, 1)?;
        let minus = pulp::height(&formula, var, -1)?;
        rows.push(json!({
            "var": var,
            "height_pos": plus.to_string(),
            "height_neg": minus.to_string(),
        }));
    }
    Ok(to_json(&json!({
        "heights": rows,
        "manifest": RunManifest::new(
            "pulp-heights",
            json!({ "file": path.display().to_string() }),
            None,
            b"",
        ),
    })))
}

pub fn pulp_tail_csv(
    d: f64,
    k: usize,
    h_max: u32,
    depth: u32,
    trials: usize,
    seed: u64,
) -> Result<String> {
    let report = pulp::tree_height_tail_mc(d, k, h_max, depth, trials, seed)?;
    let mut out = String::from("h,mc_tail,analytic_tail,binomial_sigma\n");
    for h in 1..=h_max {
        out.push_str(&format!(
            "{h},{},{},{}\n",
            report.mc_tail[(h - 1) as usize],
            report.analytic_tail[(h - 1) as usize],
            report.binomial_sigma(h)
        ));
    }
    Ok(csv_with_manifest(
        "pulp-tail",
        json!({ "d": d, "k": k, "h_max": h_max, "depth": depth, "trials": trials }),
        Some(seed),
        &out,
    ))
}

/// Fact-4.2 style check on one tree: the zero-boundary recursion against the
/// exact bottom-up count.
pub fn tree_marginal_cmd(d: f64, k: usize, depth: u32, seed: u64) -> Result<String> {
    let tree = gen::sample_gw_tree(d, k, depth, seed)?;
    let theta = uniqueness::eta_tree(&tree, uniqueness::EtaBoundary::Zero)?;
    let table = exact::tree_count(&tree, None)?;
    let bp = uniqueness::gamma(theta.root);
    let exact_marginal = table.root_marginal();
    Ok(to_json(&json!({
        "variables": tree.num_variables(),
        "clauses": tree.num_clauses(),
        "bp_marginal": bp,
        "exact_marginal": exact_marginal,
        "abs_diff": (bp - exact_marginal).abs(),
        "manifest": RunManifest::new(
            "tree-marginal",
            json!({ "d": d, "k": k, "depth": depth }),
            Some(seed),
            b"",
        ),
    })))
}

pub fn boundary_gap_csv(d: f64, k: usize, depth: u32, trials: usize, seed: u64) -> Result<String> {
    let stats = uniqueness::boundary_influence_experiment(d, k, depth, trials, seed)?;
    let mut out = String::from("depth,mean_gap,q95\n");
    for s in &stats {
        out.push_str(&format!("{},{},{}\n", s.depth, s.mean_gap, s.q95));
    }
    Ok(csv_with_manifest(
        "boundary-gap",
        json!({ "d": d, "k": k, "depth": depth, "trials": trials }),
        Some(seed),
        &out,
    ))
}

/// Contraction experiment with a truncation-level sensitivity sweep.
pub fn contraction_cmd(d: f64, k: usize, pop: usize, trials: usize, seed: u64) -> Result<String> {
    let mut per_truncation = Vec::new();
    for m in [25.0, 50.0, 100.0] {
        let r = uniqueness::contraction_estimate_truncated(d, k, pop, trials, seed, m)?;
        per_truncation.push(json!({
            "truncation": m,
            "max_ratio": r.max_ratio,
            "skipped": r.skipped,
            "ratios": r.ratios,
        }));
    }
    let constant = rscavity::thresholds::contraction_constant(d, k);
    Ok(to_json(&json!({
        "constant": constant,
        "contracts": constant < 1.0,
        "per_truncation": per_truncation,
        "manifest": RunManifest::new(
            "uniq-contraction",
            json!({ "d": d, "k": k, "pop": pop, "trials": trials }),
            Some(seed),
            b"",
        ),
    })))
}

pub fn increment_cmd(d: f64, k: usize, n: u32, samples: usize, seed: u64) -> Result<String> {
    let est = exact::rs_increment_experiment(d, k, n, samples, seed)?;
    Ok(to_json(&json!({
        "mean": est.mean,
        "std_error": est.std_error,
        "samples": est.samples,
        "unsat_samples": est.unsat_samples,
        "max_increment": est.max_increment,
        "manifest": RunManifest::new(
            "increment",
            json!({ "d": d, "k": k, "n": n, "samples": samples }),
            Some(seed),
            b"",
        ),
    })))
}

/// Statistical check of the free-entropy prediction: exact (1/n) log(Z∨1)
/// means over random formulas against the population-dynamics Bethe value,
/// with the finite-size trend over n ∈ {12, 16, 20, n}.
#[allow(clippy::too_many_arguments)]
pub fn verify_cmd(
    d: f64,
    k: usize,
    n: u32,
    samples: usize,
    pop: usize,
    iters: u32,
    mc: usize,
    seed: u64,
) -> Result<String> {
    let bethe_value = if d == 0.0 {
        2f64.ln()
    } else {
        let result = popdyn::iterate(d, k, pop, iters, seed ^ 0xbe)?;
        popdyn::bethe(&result.population, d, k, mc, seed ^ 0xeb)?.value
    };
    let mut ns: Vec<u32> = vec![12, 16, 20];
    if !ns.contains(&n) {
        ns.push(n);
        ns.sort_unstable();
    }
    let mut per_n = Vec::new();
    for (idx, &nn) in ns.iter().enumerate() {
        let trial_root = rscavity::rng::Rng::new(seed).fork(idx as u64);
        let mut values = Vec::with_capacity(samples);
        let mut sat = 0usize;
        for i in 0..samples {
            let mut sub = trial_root.fork(i as u64);
            let formula = gen::sample_formula(d, k, nn, sub.next_u64())?;
            let z = exact::count(&formula)?;
            if !z.is_unsat() {
                sat += 1;
            }
            values.push(z.log_count_or_zero() / nn as f64);
        }
        let (mean, se) = rscavity::stats::mean_and_std_error(&values);
        per_n.push(json!({
            "n": nn,
            "mean_log_z_per_n": mean,
            "std_error": se,
            "gap": (mean - bethe_value).abs(),
            "sat_rate": sat as f64 / samples as f64,
        }));
    }
    Ok(to_json(&json!({
        "bethe": bethe_value,
        "per_n": per_n,
        "manifest": RunManifest::new(
            "verify",
            json!({ "d": d, "k": k, "n": n, "samples": samples, "pop": pop, "iters": iters, "mc": mc }),
            Some(seed),
            b"",
        ),
    })))
}
