//! Exact oracles: satisfying-assignment counts, conditioned counts, the
//! finite-temperature partition function, per-variable marginals, and the
//! exact bottom-up recursion on tree formulas.
//!
//! Counting decomposes the formula into connected components of the bipartite
//! graph and enumerates each component by a Gray-code walk with incremental
//! clause-violation counters. Counts are arbitrary precision; a component is
//! refused once its variable count exceeds the cap.

use std::collections::HashMap;

pub use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::cnf::{Formula, Literal};
use crate::error::{Error, Result};
use crate::gen::{GWTree, NodeKind};
use crate::rng::Rng;

/// Default per-component brute-force limit (variables).
pub const DEFAULT_COMPONENT_CAP: usize = 30;

/// An exact count together with its natural logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub count: BigUint,
    /// ln(count); -inf when the count is zero.
    pub log_count: f64,
}

impl CountResult {
    fn from_count(count: BigUint) -> Self {
        let log_count = big_ln(&count);
        CountResult { count, log_count }
    }

    /// ln(count ∨ 1): zero for unsatisfiable formulas.
    pub fn log_count_or_zero(&self) -> f64 {
        if self.count.is_zero() {
            0.0
        } else {
            self.log_count
        }
    }

    pub fn is_unsat(&self) -> bool {
        self.count.is_zero()
    }
}

/// Variable counts of the connected components of G(Φ), largest first.
pub fn component_sizes(formula: &Formula) -> Vec<usize> {
    let dec = decompose(formula, &[]);
    let mut sizes: Vec<usize> = dec.components.iter().map(|c| c.vars.len()).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// ln of a big integer; -inf at zero.
pub fn big_ln(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 52 {
        let v = u64::try_from(x).expect("52 bits fit");
        return (v as f64).ln();
    }
    // Keep the top 64 bits and account for the shift.
    let shift = bits - 53;
    let top: u64 = (x >> shift).try_into().expect("53 bits fit");
    (top as f64).ln() + shift as f64 * std::f64::consts::LN_2
}

/// num/den as f64, safe for operands beyond the f64 exponent range.
pub fn big_ratio(num: &BigUint, den: &BigUint) -> f64 {
    assert!(!den.is_zero(), "ratio with zero denominator");
    if num.is_zero() {
        return 0.0;
    }
    let bits = num.bits().max(den.bits());
    if bits <= 900 {
        let to_f64 = |x: &BigUint| -> f64 {
            let s = x.to_string();
            s.parse::<f64>().unwrap_or(f64::INFINITY)
        };
        return to_f64(num) / to_f64(den);
    }
    let shift = bits - 64;
    let n: u64 = (num >> shift).try_into().unwrap_or(u64::MAX);
    let d: u64 = (den >> shift).try_into().unwrap_or(u64::MAX);
    n as f64 / d as f64
}

/// A connected component of G(Φ): local variable list plus clause literals
/// remapped to local slots.
struct Component {
    /// Original 1-based variable ids, ascending; local slot = position.
    vars: Vec<u32>,
    /// Per clause: (local slot, positive) pairs.
    clauses: Vec<Vec<(usize, bool)>>,
}

struct Decomposition {
    components: Vec<Component>,
    /// Variables in no clause and not excluded: contribute a factor 2 each.
    free_vars: u64,
    /// Zero-width clauses; each one is unsatisfiable on its own.
    empty_clauses: usize,
}

fn decompose(formula: &Formula, excluded: &[u32]) -> Decomposition {
    let n = formula.num_vars() as usize;
    // Union-find over variables.
    let mut parent: Vec<u32> = (0..n as u32).collect();
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    let mut empty_clauses = 0usize;
    for c in formula.clauses() {
        if c.is_empty() {
            empty_clauses += 1;
            continue;
        }
        let first = find(&mut parent, c.literals()[0].var() - 1);
        for l in &c.literals()[1..] {
            let r = find(&mut parent, l.var() - 1);
            parent[r as usize] = first;
        }
    }

    let mut occupied = vec![false; n];
    for c in formula.clauses() {
        for l in c.literals() {
            occupied[(l.var() - 1) as usize] = true;
        }
    }
    let mut excluded_mask = vec![false; n];
    for &v in excluded {
        excluded_mask[(v - 1) as usize] = true;
    }

    let mut groups: HashMap<u32, usize> = HashMap::new();
    let mut components: Vec<Component> = Vec::new();
    for v in 0..n as u32 {
        if !occupied[v as usize] {
            continue;
        }
        let root = find(&mut parent, v);
        let idx = *groups.entry(root).or_insert_with(|| {
            components.push(Component {
                vars: Vec::new(),
                clauses: Vec::new(),
            });
            components.len() - 1
        });
        components[idx].vars.push(v + 1);
    }
    for c in formula.clauses() {
        if c.is_empty() {
            continue;
        }
        let root = find(&mut parent, c.literals()[0].var() - 1);
        let idx = groups[&root];
        let comp = &mut components[idx];
        let clause = c
            .literals()
            .iter()
            .map(|l| {
                let slot = comp.vars.binary_search(&l.var()).expect("var in component");
                (slot, l.is_positive())
            })
            .collect();
        comp.clauses.push(clause);
    }
    let free_vars = (0..n)
        .filter(|&v| !occupied[v] && !excluded_mask[v])
        .count() as u64;
    Decomposition {
        components,
        free_vars,
        empty_clauses,
    }
}

/// Enumeration output for one component.
struct ComponentTally {
    /// Number of satisfying assignments of the component.
    count: u64,
    /// Per local variable: satisfying assignments with that variable true.
    true_counts: Vec<u64>,
    /// Histogram of violated-clause counts over all assignments.
    violation_histogram: Vec<u64>,
}

/// Gray-code walk over the component's assignments, maintaining per-clause
/// satisfied-literal counters.
fn enumerate_component(comp: &Component, cap: usize) -> Result<ComponentTally> {
    let v = comp.vars.len();
    if v > cap || v > 62 {
        return Err(Error::ResourceCap {
            what: "connected component",
            size: v,
            cap: cap.min(62),
        });
    }
    let m = comp.clauses.len();
    // Clauses touching each variable, with the literal polarity.
    let mut touching: Vec<Vec<(usize, bool)>> = vec![Vec::new(); v];
    for (ci, clause) in comp.clauses.iter().enumerate() {
        for &(slot, positive) in clause {
            touching[slot].push((ci, positive));
        }
    }
    // Start at the all-false assignment.
    let mut sat_count: Vec<u32> = comp
        .clauses
        .iter()
        .map(|c| c.iter().filter(|&&(_, positive)| !positive).count() as u32)
        .collect();
    let mut violated = sat_count.iter().filter(|&&s| s == 0).count();
    let mut assignment = 0u64;
    let mut count = 0u64;
    let mut true_counts = vec![0u64; v];
    let mut histogram = vec![0u64; m + 1];

    let total = 1u64 << v;
    for step in 0..total {
        if step > 0 {
            let flip = step.trailing_zeros() as usize;
            assignment ^= 1 << flip;
            let now_true = assignment >> flip & 1 == 1;
            for &(ci, positive) in &touching[flip] {
                let was = sat_count[ci];
                if positive == now_true {
                    sat_count[ci] += 1;
                    if was == 0 {
                        violated -= 1;
                    }
                } else {
                    sat_count[ci] -= 1;
                    if was == 1 {
                        violated += 1;
                    }
                }
            }
        }
        histogram[violated] += 1;
        if violated == 0 {
            count += 1;
            let mut bits = assignment;
            while bits != 0 {
                let slot = bits.trailing_zeros() as usize;
                true_counts[slot] += 1;
                bits &= bits - 1;
            }
        }
    }
    Ok(ComponentTally {
        count,
        true_counts,
        violation_histogram: histogram,
    })
}

fn count_impl(formula: &Formula, excluded: &[u32], cap: usize) -> Result<CountResult> {
    let dec = decompose(formula, excluded);
    if dec.empty_clauses > 0 {
        return Ok(CountResult::from_count(BigUint::zero()));
    }
    let mut total: BigUint = BigUint::one() << dec.free_vars;
    for comp in &dec.components {
        let tally = enumerate_component(comp, cap)?;
        if tally.count == 0 {
            return Ok(CountResult::from_count(BigUint::zero()));
        }
        total *= BigUint::from(tally.count);
    }
    Ok(CountResult::from_count(total))
}

/// Z(Φ) with the default component cap.
pub fn count(formula: &Formula) -> Result<CountResult> {
    count_with_cap(formula, DEFAULT_COMPONENT_CAP)
}

pub fn count_with_cap(formula: &Formula, cap: usize) -> Result<CountResult> {
    count_impl(formula, &[], cap)
}

/// Z(Φ, ℒ): satisfying assignments with every literal of `literals` true.
/// The conditioned variables are fixed, not free.
pub fn count_conditioned(formula: &Formula, literals: &[Literal]) -> Result<CountResult> {
    count_conditioned_with_cap(formula, literals, DEFAULT_COMPONENT_CAP)
}

pub fn count_conditioned_with_cap(
    formula: &Formula,
    literals: &[Literal],
    cap: usize,
) -> Result<CountResult> {
    for (i, a) in literals.iter().enumerate() {
        if literals[i + 1..].contains(&a.negated()) {
            return Err(Error::invalid(format!(
                "literal set contains the complementary pair {a}, {}",
                a.negated()
            )));
        }
    }
    let assigned = formula.assign_all(literals);
    let vars: Vec<u32> = literals.iter().map(|l| l.var()).collect();
    count_impl(&assigned, &vars, cap)
}

/// Z_β(Φ) = Σ_σ exp(-β · #violated clauses), enumerated exactly per component
/// and accumulated in the log domain.
pub fn count_soft(formula: &Formula, beta: f64) -> Result<f64> {
    count_soft_log(formula, beta).map(f64::exp)
}

/// ln Z_β(Φ).
pub fn count_soft_log(formula: &Formula, beta: f64) -> Result<f64> {
    count_soft_log_with_cap(formula, beta, DEFAULT_COMPONENT_CAP)
}

pub fn count_soft_log_with_cap(formula: &Formula, beta: f64, cap: usize) -> Result<f64> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::invalid(format!("beta={beta} must be > 0")));
    }
    let dec = decompose(formula, &[]);
    let mut log_total =
        dec.free_vars as f64 * std::f64::consts::LN_2 - beta * dec.empty_clauses as f64;
    for comp in &dec.components {
        let tally = enumerate_component(comp, cap)?;
        // log sum over the violation histogram: Σ_j hist[j] e^{-β j}.
        let hist = &tally.violation_histogram;
        let max_term = hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| (c as f64).ln() - beta * j as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = hist
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| ((c as f64).ln() - beta * j as f64 - max_term).exp())
            .sum();
        log_total += max_term + sum.ln();
    }
    Ok(log_total)
}

/// One exact marginal P[σ(x) = 1] as a rational.
#[derive(Debug, Clone)]
pub struct Marginal {
    pub true_count: BigUint,
    pub total: BigUint,
}

impl Marginal {
    pub fn value(&self) -> f64 {
        big_ratio(&self.true_count, &self.total)
    }
}

/// Per-variable exact marginals of a satisfiable formula.
#[derive(Debug, Clone)]
pub struct MarginalVector {
    pub entries: Vec<Marginal>,
}

impl MarginalVector {
    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(Marginal::value).collect()
    }
}

pub fn marginals(formula: &Formula) -> Result<MarginalVector> {
    marginals_with_cap(formula, DEFAULT_COMPONENT_CAP)
}

pub fn marginals_with_cap(formula: &Formula, cap: usize) -> Result<MarginalVector> {
    let dec = decompose(formula, &[]);
    if dec.empty_clauses > 0 {
        return Err(Error::Unsatisfiable);
    }
    let mut comp_counts = Vec::with_capacity(dec.components.len());
    for comp in &dec.components {
        let tally = enumerate_component(comp, cap)?;
        if tally.count == 0 {
            return Err(Error::Unsatisfiable);
        }
        comp_counts.push(tally);
    }
    // Total Z and per-variable counts: within a component the marginal is
    // true_count/comp_count; other components and free variables cancel.
    let mut z: BigUint = BigUint::one() << dec.free_vars;
    for tally in &comp_counts {
        z *= BigUint::from(tally.count);
    }
    let n = formula.num_vars() as usize;
    let half = Marginal {
        true_count: BigUint::one(),
        total: BigUint::from(2u32),
    };
    let mut entries = vec![half; n];
    for (comp, tally) in dec.components.iter().zip(&comp_counts) {
        for (slot, &var) in comp.vars.iter().enumerate() {
            entries[(var - 1) as usize] = Marginal {
                true_count: BigUint::from(tally.true_counts[slot]),
                total: BigUint::from(tally.count),
            };
        }
    }
    Ok(MarginalVector { entries })
}

/// Bottom-up pair (Z^↓(node, +1), Z^↓(node, -1)) for every variable node.
#[derive(Debug, Clone)]
pub struct TreeCountTable {
    /// Indexed by arena node id; `None` for clause nodes.
    pub down: Vec<Option<(BigUint, BigUint)>>,
    pub root_plus: BigUint,
    pub root_minus: BigUint,
}

impl TreeCountTable {
    pub fn root_total(&self) -> BigUint {
        &self.root_plus + &self.root_minus
    }

    /// P[σ(root) = 1] among satisfying assignments.
    pub fn root_marginal(&self) -> f64 {
        big_ratio(&self.root_plus, &self.root_total())
    }
}

/// Exact counting recursion on a tree formula, optionally conditioned on an
/// assignment of every depth-2ℓ boundary variable (`boundary[node_id]`).
pub fn tree_count(tree: &GWTree, boundary: Option<&HashMap<u32, i8>>) -> Result<TreeCountTable> {
    if let Some(b) = boundary {
        for id in tree.boundary_ids() {
            if !b.contains_key(&id) {
                return Err(Error::invalid(format!(
                    "boundary assignment misses variable node {id}"
                )));
            }
        }
    }
    let mut down: Vec<Option<(BigUint, BigUint)>> = vec![None; tree.nodes.len()];
    // Arena order is top-down, so the reverse is a valid evaluation order.
    for node in tree.nodes.iter().rev() {
        if node.kind != NodeKind::Variable {
            continue;
        }
        let pinned = boundary.and_then(|b| b.get(&node.id).copied());
        let pair = if let Some(value) = pinned {
            if value == 1 {
                (BigUint::one(), BigUint::zero())
            } else {
                (BigUint::zero(), BigUint::one())
            }
        } else {
            let mut z_plus = BigUint::one();
            let mut z_minus = BigUint::one();
            for &clause_id in &node.children {
                let clause = &tree.nodes[clause_id as usize];
                // Product over children of total counts, and of the counts
                // pinned at the clause-falsifying value.
                let mut all = BigUint::one();
                let mut falsifying = BigUint::one();
                for &child in &clause.children {
                    let (p, m) = down[child as usize]
                        .as_ref()
                        .expect("children evaluated before parents");
                    all *= p + m;
                    let child_sign = tree.nodes[child as usize].parent_sign;
                    falsifying *= if child_sign == 1 { m } else { p };
                }
                let constrained = &all - &falsifying;
                if clause.parent_sign == 1 {
                    z_plus *= &all;
                    z_minus *= &constrained;
                } else {
                    z_plus *= &constrained;
                    z_minus *= &all;
                }
            }
            (z_plus, z_minus)
        };
        down[node.id as usize] = Some(pair);
    }
    let (root_plus, root_minus) = down[0].clone().expect("root is a variable node");
    Ok(TreeCountTable {
        down,
        root_plus,
        root_minus,
    })
}

/// Monte Carlo estimate of E[log(Z(Φ‴)∨1)] − E[log(Z(Φ″)∨1)] over coupled
/// samples sharing the base formula Φ′.
#[derive(Debug, Clone)]
pub struct IncrementEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
    /// Samples where either coupled formula was unsatisfiable.
    pub unsat_samples: usize,
    /// Largest single-sample increment; adding one variable can exceed
    /// log 2 at finite n, so this is a diagnostic, not an assertion.
    pub max_increment: f64,
}

pub fn rs_increment_experiment(
    d: f64,
    k: usize,
    n: u32,
    samples: usize,
    seed: u64,
) -> Result<IncrementEstimate> {
    rs_increment_experiment_with_cap(d, k, n, samples, seed, DEFAULT_COMPONENT_CAP)
}

pub fn rs_increment_experiment_with_cap(
    d: f64,
    k: usize,
    n: u32,
    samples: usize,
    seed: u64,
    cap: usize,
) -> Result<IncrementEstimate> {
    use rayon::prelude::*;
    if samples == 0 {
        return Err(Error::invalid("samples must be positive"));
    }
    let root = Rng::new(seed).fork(0x696e6372); // "incr"
    let diffs: Vec<Result<(f64, bool)>> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let triple = crate::gen::sample_coupling(d, k, n, root.fork(i as u64).next_label())?;
            let z2 = count_with_cap(&triple.extended, cap)?;
            let z3 = count_with_cap(&triple.augmented, cap)?;
            let unsat = z2.count.is_zero() || z3.count.is_zero();
            Ok((z3.log_count_or_zero() - z2.log_count_or_zero(), unsat))
        })
        .collect();
    let mut values = Vec::with_capacity(samples);
    let mut unsat_samples = 0usize;
    for d in diffs {
        let (x, unsat) = d?;
        values.push(x);
        unsat_samples += unsat as usize;
    }
    let (mean, std_error) = crate::stats::mean_and_std_error(&values);
    let max_increment = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(IncrementEstimate {
        mean,
        std_error,
        samples,
        unsat_samples,
        max_increment,
    })
}

impl Rng {
    /// A fresh label for nested forks: used where a worker needs its own
    /// independent root.
    fn next_label(&self) -> u64 {
        self.clone().next_u64()
    }
}
