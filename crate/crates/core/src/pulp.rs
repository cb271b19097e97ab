//! Pure literal elimination with synchronous round bookkeeping, literal
//! heights, and the pure literal pursuit closure algorithm.
//!
//! Rounds are synchronous: every clause containing a variable that is pure in
//! the current residual formula is removed simultaneously, and the round
//! counter advances. Heights are evaluated on masked views of the base
//! formula (clause mask plus a stripped variable) so clause indices stay
//! stable and nothing is copied.

use std::collections::{HashMap, HashSet, VecDeque};

use rayon::prelude::*;

use crate::cnf::{Formula, Literal};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// A pure-literal-elimination round count or literal height; `Never` is the
/// ∞ sentinel and orders above every finite value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Height {
    Finite(u32),
    Never,
}

impl Height {
    pub fn is_finite(self) -> bool {
        matches!(self, Height::Finite(_))
    }

    /// Finite value or `u32::MAX` when never removed.
    pub fn finite_or_max(self) -> u32 {
        match self {
            Height::Finite(h) => h,
            Height::Never => u32::MAX,
        }
    }
}

impl std::fmt::Display for Height {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Height::Finite(h) => write!(f, "{h}"),
            Height::Never => write!(f, "inf"),
        }
    }
}

/// Per-clause removal rounds of synchronous pure literal elimination.
#[derive(Debug, Clone)]
pub struct EliminationTrace {
    /// Round (1-based) at which each clause is removed, `Never` for survivors.
    pub round_of_clause: Vec<Height>,
    /// Total rounds executed before the process stalls.
    pub rounds: u32,
}

/// Runs elimination on a masked view: clauses with `alive[i] == false` are
/// absent, and occurrences of `stripped_var` are ignored (the Φ[x↦s] view).
fn eliminate_view(
    formula: &Formula,
    mut alive: Vec<bool>,
    stripped_var: Option<u32>,
) -> EliminationTrace {
    let n = formula.num_vars() as usize;
    let m = formula.num_clauses();
    let mut pos = vec![0u32; n];
    let mut neg = vec![0u32; n];
    let counted = |var: u32| stripped_var != Some(var);
    for (i, c) in formula.clauses().iter().enumerate() {
        if !alive[i] {
            continue;
        }
        for l in c.literals() {
            if counted(l.var()) {
                if l.is_positive() {
                    pos[(l.var() - 1) as usize] += 1;
                } else {
                    neg[(l.var() - 1) as usize] += 1;
                }
            }
        }
    }
    let mut rounds = 0u32;
    let mut round_of_clause = vec![Height::Never; m];
    loop {
        let removable: Vec<usize> = (0..m)
            .filter(|&i| alive[i])
            .filter(|&i| {
                formula.clause(i).literals().iter().any(|l| {
                    let slot = (l.var() - 1) as usize;
                    counted(l.var())
                        && (pos[slot] + neg[slot] > 0)
                        && (pos[slot] == 0 || neg[slot] == 0)
                })
            })
            .collect();
        if removable.is_empty() {
            break;
        }
        rounds += 1;
        for &i in &removable {
            alive[i] = false;
            round_of_clause[i] = Height::Finite(rounds);
            for l in formula.clause(i).literals() {
                if counted(l.var()) {
                    let slot = (l.var() - 1) as usize;
                    if l.is_positive() {
                        pos[slot] -= 1;
                    } else {
                        neg[slot] -= 1;
                    }
                }
            }
        }
    }
    EliminationTrace {
        round_of_clause,
        rounds,
    }
}

/// Synchronous pure literal elimination on the whole formula.
pub fn eliminate(formula: &Formula) -> EliminationTrace {
    eliminate_view(formula, vec![true; formula.num_clauses()], None)
}

/// The height 𝔥_x(s, Φ) of literal s·x: zero when no clause opposes the
/// assignment, otherwise the last round at which elimination discharges an
/// opposing clause of Φ[x↦s].
pub fn height(formula: &Formula, var: u32, s: i8) -> Result<Height> {
    let (pos, neg) = formula.occurrences(var)?;
    let (satisfied, opposing) = if s == 1 { (pos, neg) } else { (neg, pos) };
    if opposing.is_empty() {
        return Ok(Height::Finite(0));
    }
    let mut alive = vec![true; formula.num_clauses()];
    for &i in satisfied {
        alive[i] = false;
    }
    let trace = eliminate_view(formula, alive, Some(var));
    Ok(opposing
        .iter()
        .map(|&i| trace.round_of_clause[i])
        .max()
        .expect("opposing set is non-empty"))
}

/// Height table for every (variable, sign) pair, memoised per base formula.
pub struct HeightCache<'a> {
    formula: &'a Formula,
    cache: HashMap<(u32, i8), Height>,
}

impl<'a> HeightCache<'a> {
    pub fn new(formula: &'a Formula) -> Self {
        HeightCache {
            formula,
            cache: HashMap::new(),
        }
    }

    pub fn get(&mut self, var: u32, s: i8) -> Result<Height> {
        if let Some(&h) = self.cache.get(&(var, s)) {
            return Ok(h);
        }
        let h = height(self.formula, var, s)?;
        self.cache.insert((var, s), h);
        Ok(h)
    }
}

/// Tie-break keys; lower key wins, equal keys fall back to the index. The
/// default keys are the indices themselves; trees use Gaussian labels.
#[derive(Debug, Clone, Default)]
pub struct TieBreak {
    pub clause_keys: Vec<f64>,
    pub var_keys: Vec<f64>,
}

impl TieBreak {
    fn clause_key(&self, idx: usize) -> f64 {
        self.clause_keys.get(idx).copied().unwrap_or(idx as f64)
    }

    fn var_key(&self, var: u32) -> f64 {
        self.var_keys
            .get((var - 1) as usize)
            .copied()
            .unwrap_or(var as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosureOutcome {
    /// PULP1-PULP2 hold for the returned literal set.
    Closure(Vec<Literal>),
    /// Some clause had all its literals deemed false; by convention the
    /// closure is then the set of all 2n literals.
    Contradiction,
}

#[derive(Debug, Clone)]
pub struct ClosureResult {
    pub outcome: ClosureOutcome,
    /// Steps taken: (clause index chosen, literal added).
    pub trace: Vec<(usize, Literal)>,
    /// |L̄|; on contradiction, 2n per the convention.
    pub reported_size: usize,
}

impl ClosureResult {
    pub fn is_contradiction(&self) -> bool {
        matches!(self.outcome, ClosureOutcome::Contradiction)
    }
}

/// Graph distance in G(Φ) from the variable set of the initial literals to
/// each clause; `usize::MAX` for unreachable clauses.
fn clause_distances(formula: &Formula, initial_vars: &[u32]) -> Vec<usize> {
    let n = formula.num_vars() as usize;
    let m = formula.num_clauses();
    let mut var_dist = vec![usize::MAX; n];
    let mut clause_dist = vec![usize::MAX; m];
    let mut queue: VecDeque<u32> = VecDeque::new();
    for &v in initial_vars {
        if var_dist[(v - 1) as usize] == usize::MAX {
            var_dist[(v - 1) as usize] = 0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        let dv = var_dist[(v - 1) as usize];
        let (pos, neg) = formula.occurrences(v).expect("initial vars are in range");
        for &ci in pos.iter().chain(neg) {
            if clause_dist[ci] != usize::MAX {
                continue;
            }
            clause_dist[ci] = dv + 1;
            for l in formula.clause(ci).literals() {
                let slot = (l.var() - 1) as usize;
                if var_dist[slot] == usize::MAX {
                    var_dist[slot] = dv + 2;
                    queue.push_back(l.var());
                }
            }
        }
    }
    clause_dist
}

/// Pure literal pursuit: grows `initial` to a closure satisfying PULP1-PULP2
/// or reports a contradiction. Candidate clauses are taken at minimum graph
/// distance from the initial set (frozen at call time), and the literal added
/// is the sign-matching one of minimum height; ties break by key, then index.
pub fn pulp(
    formula: &Formula,
    initial: &[Literal],
    tie: Option<&TieBreak>,
) -> Result<ClosureResult> {
    let default_tie = TieBreak::default();
    let tie = tie.unwrap_or(&default_tie);
    let mut closure: HashSet<Literal> = HashSet::new();
    for &l in initial {
        formula.occurrences(l.var())?; // range check
        if closure.contains(&l.negated()) {
            return Err(Error::invalid(format!(
                "initial literal set contains the complementary pair {l}, {}",
                l.negated()
            )));
        }
        closure.insert(l);
    }
    let initial_vars: Vec<u32> = initial.iter().map(|l| l.var()).collect();
    let dist = clause_distances(formula, &initial_vars);
    let mut heights = HeightCache::new(formula);
    let mut trace = Vec::new();

    loop {
        // Clauses with a literal deemed false but none deemed true.
        let mut best: Option<(usize, f64, usize)> = None;
        for (i, c) in formula.clauses().iter().enumerate() {
            let has_true = c.literals().iter().any(|l| closure.contains(l));
            if has_true {
                continue;
            }
            let has_false = c.literals().iter().any(|l| closure.contains(&l.negated()));
            if !has_false {
                continue;
            }
            let cand = (dist[i], tie.clause_key(i), i);
            if best.is_none_or(|(bd, bk, bi)| cand < (bd, bk, bi)) {
                best = Some(cand);
            }
        }
        let Some((_, _, chosen)) = best else {
            break;
        };
        let clause = formula.clause(chosen);
        // Eligible variables: neither polarity decided yet.
        let mut pick: Option<(Height, f64, u32, Literal)> = None;
        for l in clause.literals() {
            if closure.contains(l) || closure.contains(&l.negated()) {
                continue;
            }
            let h = heights.get(l.var(), l.sign())?;
            let cand = (h, tie.var_key(l.var()), l.var());
            if pick
                .as_ref()
                .is_none_or(|(bh, bk, bv, _)| cand < (*bh, *bk, *bv))
            {
                pick = Some((cand.0, cand.1, cand.2, *l));
            }
        }
        let Some((_, _, _, lit)) = pick else {
            return Ok(ClosureResult {
                outcome: ClosureOutcome::Contradiction,
                trace,
                reported_size: 2 * formula.num_vars() as usize,
            });
        };
        closure.insert(lit);
        trace.push((chosen, lit));
    }
    let mut literals: Vec<Literal> = closure.into_iter().collect();
    literals.sort();
    let reported_size = literals.len();
    Ok(ClosureResult {
        outcome: ClosureOutcome::Closure(literals),
        trace,
        reported_size,
    })
}

/// Checks PULP1 (every clause with a false-deemed literal has a true-deemed
/// one), PULP2 (no complementary pair) and `closure ⊇ initial`.
pub fn verify_closure(formula: &Formula, initial: &[Literal], closure: &[Literal]) -> bool {
    let set: HashSet<Literal> = closure.iter().copied().collect();
    if !initial.iter().all(|l| set.contains(l)) {
        return false;
    }
    if closure.iter().any(|l| set.contains(&l.negated())) {
        return false;
    }
    formula.clauses().iter().all(|c| {
        let has_false = c.literals().iter().any(|l| set.contains(&l.negated()));
        let has_true = c.literals().iter().any(|l| set.contains(l));
        !has_false || has_true
    })
}

/// φ_{d,k}(z) = 1 − exp(−(d/2)·z^{k−1}), the height-tail iteration map.
pub fn height_tail_map(d: f64, k: usize, z: f64) -> f64 {
    -(-0.5 * d * z.powi(k as i32 - 1)).exp_m1()
}

/// Analytic tail iterates p_h = φ^h(1) for h = 1..=h_max.
pub fn analytic_height_tail(d: f64, k: usize, h_max: u32) -> Vec<f64> {
    let mut tail = Vec::with_capacity(h_max as usize);
    let mut p = 1.0;
    for _ in 0..h_max {
        p = height_tail_map(d, k, p);
        tail.push(p);
    }
    tail
}

/// Monte Carlo vs analytic tail probabilities P[𝔥_root(+1) ≥ h].
#[derive(Debug, Clone)]
pub struct TailReport {
    /// Index h-1 holds P[height ≥ h].
    pub mc_tail: Vec<f64>,
    pub analytic_tail: Vec<f64>,
    pub trials: usize,
}

impl TailReport {
    /// Binomial standard error of the Monte Carlo tail at h (1-based).
    pub fn binomial_sigma(&self, h: u32) -> f64 {
        let p = self.analytic_tail[(h - 1) as usize];
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Samples `trials` trees 𝕋^{(ℓ)} and measures the tail of the root height,
/// alongside the analytic iterate.
pub fn tree_height_tail_mc(
    d: f64,
    k: usize,
    h_max: u32,
    depth: u32,
    trials: usize,
    seed: u64,
) -> Result<TailReport> {
    if depth < h_max {
        return Err(Error::invalid(format!(
            "depth {depth} below h_max {h_max}: tail would be clipped"
        )));
    }
    let root = Rng::new(seed).fork(0x7461696c); // "tail"
    let heights: Vec<Result<u32>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut sub = root.fork(i as u64);
            let tree = crate::gen::sample_gw_tree(d, k, depth, sub.next_u64())?;
            let formula = crate::gen::tree_to_formula(&tree);
            Ok(height(&formula, 1, 1)?.finite_or_max())
        })
        .collect();
    let mut counts = vec![0usize; h_max as usize];
    for h in heights {
        let h = h?;
        for hh in 1..=h_max {
            if h >= hh {
                counts[(hh - 1) as usize] += 1;
            }
        }
    }
    Ok(TailReport {
        mc_tail: counts.iter().map(|&c| c as f64 / trials as f64).collect(),
        analytic_tail: analytic_height_tail(d, k, h_max),
        trials,
    })
}
