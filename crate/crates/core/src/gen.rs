//! Seeded generation of random k-CNF formulas, the three-formula coupling used
//! by the cavity increment experiment, and truncated Galton-Watson tree
//! formulas.
//!
//! Every sampler forks a named substream per clause or per node, so identical
//! `(params, seed)` produce identical output regardless of call order or
//! thread count. Clauses are canonicalised by sorting their variable indices;
//! the clause distribution is over unordered variable sets with signs, so this
//! loses nothing.

use std::io::Write;

use crate::cnf::{Clause, Formula, Literal};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Default ceiling on Galton-Watson tree nodes before aborting.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

/// One uniform clause: k distinct variables from `1..=n`, independent signs,
/// sorted by variable index.
fn random_clause(rng: &mut Rng, k: usize, n: u32) -> Clause {
    let mut lits: Vec<Literal> = rng
        .distinct_indices(n as u64, k)
        .into_iter()
        .map(|i| Literal::new(i as u32 + 1, rng.sign()))
        .collect();
    lits.sort_unstable_by_key(|l| l.var());
    Clause::new(lits).expect("distinct indices cannot repeat a variable")
}

/// Φ_{d,k}(n): Po(dn/k) clauses drawn independently and uniformly.
pub fn sample_formula(d: f64, k: usize, n: u32, seed: u64) -> Result<Formula> {
    if d < 0.0 {
        return Err(Error::invalid(format!("density d={d} must be >= 0")));
    }
    if k < 2 {
        return Err(Error::invalid(format!("k={k} must be >= 2")));
    }
    if (n as usize) < k {
        return Err(Error::invalid(format!("n={n} smaller than k={k}")));
    }
    let root = Rng::new(seed).fork(0x666f726d756c61); // "formula"
    let m = root.fork(0).clone().poisson(d * n as f64 / k as f64);
    let clauses = (0..m)
        .map(|i| random_clause(&mut root.fork(i + 1), k, n))
        .collect();
    Formula::new(k, n, clauses)
}

/// The coupled triple Φ′ ⊂ Φ″ and Φ′ ⊂ Φ‴ sharing the base formula.
#[derive(Debug, Clone)]
pub struct CouplingTriple {
    /// Φ′ on n variables with Po(d(n-k+1)/k) clauses.
    pub base: Formula,
    /// Φ″ = Φ′ plus Po(d(k-1)/k) fresh uniform clauses; distributed as Φ_{d,k}(n).
    pub extended: Formula,
    /// Φ‴ = Φ′ plus variable x_{n+1} and Po(d) clauses through it; distributed
    /// as Φ_{d,k}(n+1).
    pub augmented: Formula,
    /// Clause counts of the two extensions (Δ″, Δ‴).
    pub deltas: (u64, u64),
}

/// Samples the coupling CPL1-CPL3.
pub fn sample_coupling(d: f64, k: usize, n: u32, seed: u64) -> Result<CouplingTriple> {
    if (n as usize) < k {
        return Err(Error::invalid(format!("n={n} smaller than k={k}")));
    }
    let root = Rng::new(seed).fork(0x63706c); // "cpl"

    let m_base = root
        .fork(0)
        .clone()
        .poisson(d * (n as f64 - k as f64 + 1.0) / k as f64);
    let base_clauses: Vec<Clause> = (0..m_base)
        .map(|i| random_clause(&mut root.fork(1 + i), k, n))
        .collect();
    let base = Formula::new(k, n, base_clauses.clone())?;

    let ext_stream = root.fork(u64::MAX - 1);
    let delta2 = ext_stream
        .fork(0)
        .clone()
        .poisson(d * (k as f64 - 1.0) / k as f64);
    let mut ext_clauses = base_clauses.clone();
    for i in 0..delta2 {
        ext_clauses.push(random_clause(&mut ext_stream.fork(1 + i), k, n));
    }
    let extended = Formula::new(k, n, ext_clauses)?;

    let aug_stream = root.fork(u64::MAX);
    let delta3 = aug_stream.fork(0).clone().poisson(d);
    let mut aug_clauses = base_clauses;
    for i in 0..delta3 {
        let mut rng = aug_stream.fork(1 + i);
        let mut lits: Vec<Literal> = rng
            .distinct_indices(n as u64, k - 1)
            .into_iter()
            .map(|v| Literal::new(v as u32 + 1, rng.sign()))
            .collect();
        lits.push(Literal::new(n + 1, rng.sign()));
        lits.sort_unstable_by_key(|l| l.var());
        aug_clauses.push(Clause::new(lits).expect("fresh variable cannot collide"));
    }
    let augmented = Formula::new(k, n + 1, aug_clauses)?;

    Ok(CouplingTriple {
        base,
        extended,
        augmented,
        deltas: (delta2, delta3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Variable,
    Clause,
}

/// One node of a Galton-Watson tree formula.
#[derive(Debug, Clone)]
pub struct GWNode {
    pub id: u32,
    pub kind: NodeKind,
    /// Parent node id; `None` for the root.
    pub parent: Option<u32>,
    /// Sign of the edge to the parent (variable-clause edges carry signs on
    /// both sides); 0 for the root.
    pub parent_sign: i8,
    pub children: Vec<u32>,
    /// Gaussian tie-break key; ties beyond that break by id.
    pub label: f64,
    /// Graph distance from the root.
    pub depth: u32,
}

/// A (d, k) Galton-Watson tree truncated at variable-level `depth`.
#[derive(Debug, Clone)]
pub struct GWTree {
    pub nodes: Vec<GWNode>,
    pub depth: u32,
    pub d: f64,
    pub k: usize,
}

impl GWTree {
    pub fn root(&self) -> &GWNode {
        &self.nodes[0]
    }

    pub fn variable_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Variable)
            .map(|n| n.id)
    }

    pub fn num_variables(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Variable)
            .count()
    }

    pub fn num_clauses(&self) -> usize {
        self.nodes.len() - self.num_variables()
    }

    /// Variable nodes at variable-level exactly `depth` (the boundary ∂^{2ℓ}r).
    pub fn boundary_ids(&self) -> Vec<u32> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Variable && n.depth == 2 * self.depth)
            .map(|n| n.id)
            .collect()
    }
}

/// Samples 𝕋^{(ℓ)}_{d,k}: the root variable begets Po(d) clauses, every clause
/// begets k-1 variables, truncated after `depth` variable levels below the
/// root. Aborts once the arena exceeds `node_cap`.
pub fn sample_gw_tree_capped(
    d: f64,
    k: usize,
    depth: u32,
    seed: u64,
    node_cap: usize,
) -> Result<GWTree> {
    if d < 0.0 || k < 2 {
        return Err(Error::invalid(format!("bad GW parameters d={d}, k={k}")));
    }
    let root_rng = Rng::new(seed).fork(0x74726565); // "tree"
    let mut nodes = vec![GWNode {
        id: 0,
        kind: NodeKind::Variable,
        parent: None,
        parent_sign: 0,
        children: Vec::new(),
        label: root_rng.fork(0).clone().gaussian(),
        depth: 0,
    }];
    // Frontier of variable node ids awaiting offspring.
    let mut frontier = vec![0u32];
    for _level in 0..depth {
        let mut next = Vec::new();
        for var_id in frontier {
            let mut rng = root_rng.fork(var_id as u64 + 1);
            let offspring = rng.poisson(d);
            for _ in 0..offspring {
                let clause_id = nodes.len() as u32;
                let clause_depth = nodes[var_id as usize].depth + 1;
                nodes.push(GWNode {
                    id: clause_id,
                    kind: NodeKind::Clause,
                    parent: Some(var_id),
                    parent_sign: rng.sign(),
                    children: Vec::new(),
                    label: rng.gaussian(),
                    depth: clause_depth,
                });
                nodes[var_id as usize].children.push(clause_id);
                for _ in 0..k - 1 {
                    let var_child = nodes.len() as u32;
                    nodes.push(GWNode {
                        id: var_child,
                        kind: NodeKind::Variable,
                        parent: Some(clause_id),
                        parent_sign: rng.sign(),
                        children: Vec::new(),
                        label: rng.gaussian(),
                        depth: clause_depth + 1,
                    });
                    nodes[clause_id as usize].children.push(var_child);
                    next.push(var_child);
                }
                if nodes.len() > node_cap {
                    return Err(Error::ResourceCap {
                        what: "galton-watson tree",
                        size: nodes.len(),
                        cap: node_cap,
                    });
                }
            }
        }
        frontier = next;
    }
    Ok(GWTree { nodes, depth, d, k })
}

pub fn sample_gw_tree(d: f64, k: usize, depth: u32, seed: u64) -> Result<GWTree> {
    sample_gw_tree_capped(d, k, depth, seed, DEFAULT_NODE_CAP)
}

/// Formula variable index (1-based, arena order) per node id; clause slots
/// hold 0.
pub fn variable_indices(tree: &GWTree) -> Vec<u32> {
    let mut var_index = vec![0u32; tree.nodes.len()];
    let mut next = 0u32;
    for node in &tree.nodes {
        if node.kind == NodeKind::Variable {
            next += 1;
            var_index[node.id as usize] = next;
        }
    }
    var_index
}

/// The Boolean formula of a tree: variables are the variable nodes (numbered
/// 1.. in arena order), each clause node becomes a clause over its parent and
/// children with the edge signs.
pub fn tree_to_formula(tree: &GWTree) -> Formula {
    let var_index = variable_indices(tree);
    let next = tree.num_variables() as u32;
    let mut clauses = Vec::with_capacity(tree.num_clauses());
    for node in &tree.nodes {
        if node.kind != NodeKind::Clause {
            continue;
        }
        let parent = node.parent.expect("clause nodes always have a parent");
        let mut lits = vec![Literal::new(var_index[parent as usize], node.parent_sign)];
        for &child in &node.children {
            let sign = tree.nodes[child as usize].parent_sign;
            lits.push(Literal::new(var_index[child as usize], sign));
        }
        lits.sort_unstable_by_key(|l| l.var());
        clauses.push(Clause::new(lits).expect("tree variables are distinct"));
    }
    Formula::new(tree.k, next, clauses).expect("tree clauses have width k")
}

/// Tie-break keys for [`tree_to_formula`] output, aligned with formula
/// indexing: `var_keys[v-1]` is the Gaussian label of variable v, and
/// `clause_keys[i]` that of clause i.
pub fn tree_tie_break_keys(tree: &GWTree) -> (Vec<f64>, Vec<f64>) {
    let mut var_keys = Vec::with_capacity(tree.num_variables());
    let mut clause_keys = Vec::with_capacity(tree.num_clauses());
    for node in &tree.nodes {
        match node.kind {
            NodeKind::Variable => var_keys.push(node.label),
            NodeKind::Clause => clause_keys.push(node.label),
        }
    }
    (clause_keys, var_keys)
}

/// Writes the edge-list export: a JSON metadata header line, then one line
/// `parent child kind sign label` per non-root node.
pub fn write_tree_edges<W: Write>(writer: &mut W, tree: &GWTree) -> Result<()> {
    writeln!(
        writer,
        "{{\"d\":{},\"k\":{},\"depth\":{},\"nodes\":{}}}",
        tree.d,
        tree.k,
        tree.depth,
        tree.nodes.len()
    )?;
    for node in &tree.nodes {
        if let Some(parent) = node.parent {
            let kind = match node.kind {
                NodeKind::Variable => "var",
                NodeKind::Clause => "clause",
            };
            writeln!(
                writer,
                "{} {} {} {} {}",
                parent, node.id, kind, node.parent_sign, node.label
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_density_gives_empty_formula() {
        let f = sample_formula(0.0, 3, 50, 1).unwrap();
        assert_eq!(f.num_clauses(), 0);
        assert_eq!(f.num_vars(), 50);
    }

    #[test]
    fn n_below_k_is_input_error() {
        assert!(sample_formula(1.0, 3, 2, 1).is_err());
        assert!(sample_coupling(1.0, 3, 2, 1).is_err());
    }

    #[test]
    fn determinism() {
        let a = sample_formula(1.0, 3, 100, 7).unwrap();
        let b = sample_formula(1.0, 3, 100, 7).unwrap();
        assert_eq!(a, b);
        let t = sample_gw_tree(1.0, 3, 3, 9).unwrap();
        let u = sample_gw_tree(1.0, 3, 3, 9).unwrap();
        assert_eq!(t.nodes.len(), u.nodes.len());
        assert!(t
            .nodes
            .iter()
            .zip(&u.nodes)
            .all(|(a, b)| a.label == b.label && a.parent_sign == b.parent_sign));
    }

    #[test]
    fn clause_count_matches_poisson_moments() {
        // Sample mean of m over many seeds within 3 sigma of dn/k.
        let (d, k, n) = (1.0, 3usize, 3000u32);
        let seeds = 10_000u64;
        let target = d * n as f64 / k as f64;
        let mut total = 0u64;
        for s in 0..seeds {
            total += sample_formula(d, k, n, s).unwrap().num_clauses() as u64;
        }
        let mean = total as f64 / seeds as f64;
        let sigma = (target / seeds as f64).sqrt();
        assert!(
            (mean - target).abs() < 3.0 * sigma,
            "mean {mean} target {target} sigma {sigma}"
        );
    }

    #[test]
    fn clause_vars_distinct_and_signs_uniform() {
        // chi^2 over the 8 sign patterns at k=3.
        let f = sample_formula(4.0, 3, 60, 3).unwrap();
        let mut more = Vec::new();
        for s in 100..160 {
            more.push(sample_formula(4.0, 3, 60, s).unwrap());
        }
        let mut pattern = [0u64; 8];
        let mut m = 0u64;
        for f in std::iter::once(&f).chain(more.iter()) {
            for c in f.clauses() {
                assert_eq!(c.len(), 3);
                let mut vars: Vec<u32> = c.literals().iter().map(|l| l.var()).collect();
                vars.dedup();
                assert_eq!(vars.len(), 3, "repeated variable in clause");
                let idx = c
                    .literals()
                    .iter()
                    .fold(0usize, |acc, l| acc * 2 + l.is_positive() as usize);
                pattern[idx] += 1;
                m += 1;
            }
        }
        let expect = m as f64 / 8.0;
        let chi2: f64 = pattern
            .iter()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // 7 dof; P(chi2 > 30) < 1e-4.
        assert!(chi2 < 30.0, "chi2 {chi2} pattern {pattern:?}");
    }

    #[test]
    fn clause_marginals_uniform_tiny() {
        // k=2, n=4: 2^2 * C(4,2) = 24 equally likely clauses.
        let mut counts = std::collections::HashMap::new();
        let mut m = 0u64;
        for s in 0..4000 {
            let f = sample_formula(3.0, 2, 4, s).unwrap();
            for c in f.clauses() {
                *counts.entry(c.clone()).or_insert(0u64) += 1;
                m += 1;
            }
        }
        assert_eq!(counts.len(), 24);
        let expect = m as f64 / 24.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        // 23 dof; P(chi2 > 60) < 5e-5.
        assert!(chi2 < 60.0, "chi2 {chi2}");
    }

    #[test]
    fn coupling_shapes() {
        let (d, k, n) = (1.5, 3usize, 40u32);
        let t = sample_coupling(d, k, n, 11).unwrap();
        assert_eq!(
            t.extended.num_clauses(),
            t.base.num_clauses() + t.deltas.0 as usize
        );
        assert_eq!(
            t.augmented.num_clauses(),
            t.base.num_clauses() + t.deltas.1 as usize
        );
        assert_eq!(t.augmented.num_vars(), n + 1);
        // Every added clause of the augmented formula contains x_{n+1} exactly once.
        for c in &t.augmented.clauses()[t.base.num_clauses()..] {
            assert_eq!(c.literals().iter().filter(|l| l.var() == n + 1).count(), 1);
        }
        // Base clauses never touch x_{n+1}.
        for c in t.base.clauses() {
            assert!(!c.contains_var(n + 1));
        }
    }

    #[test]
    fn coupling_poisson_means() {
        // E[m'] + E[D''] = dn/k (Poisson additivity) and E[D'''] = d.
        let (d, k, n) = (1.2, 3usize, 30u32);
        let seeds = 10_000u64;
        let (mut total_m2, mut total_d3) = (0u64, 0u64);
        for s in 0..seeds {
            let t = sample_coupling(d, k, n, s).unwrap();
            total_m2 += t.extended.num_clauses() as u64;
            total_d3 += t.deltas.1;
        }
        let mean_m2 = total_m2 as f64 / seeds as f64;
        let target_m2 = d * n as f64 / k as f64;
        assert!(
            (mean_m2 - target_m2).abs() < 3.0 * (target_m2 / seeds as f64).sqrt(),
            "mean {mean_m2} target {target_m2}"
        );
        let mean_d3 = total_d3 as f64 / seeds as f64;
        assert!(
            (mean_d3 - d).abs() < 3.0 * (d / seeds as f64).sqrt(),
            "mean {mean_d3} target {d}"
        );
    }

    #[test]
    fn tree_degenerate_cases() {
        let t = sample_gw_tree(1.0, 3, 0, 5).unwrap();
        assert_eq!(t.nodes.len(), 1);
        let t = sample_gw_tree(0.0, 3, 4, 5).unwrap();
        assert_eq!(t.nodes.len(), 1);
    }

    #[test]
    fn tree_root_offspring_mean() {
        let (d, k) = (1.0, 3usize);
        let trials = 100_000u64;
        let mut total = 0usize;
        for s in 0..trials {
            total += sample_gw_tree(d, k, 1, s).unwrap().root().children.len();
        }
        let mean = total as f64 / trials as f64;
        assert!(
            (mean - d).abs() < 3.0 * (d / trials as f64).sqrt(),
            "mean {mean}"
        );
    }

    #[test]
    fn tree_level_population_matches_branching_process() {
        // E[#variables at level t] = (d(k-1))^t.
        let (d, k, depth) = (0.8, 3usize, 3u32);
        let trials = 20_000u64;
        let mut level_counts = vec![0u64; depth as usize + 1];
        for s in 0..trials {
            let t = sample_gw_tree(d, k, depth, s).unwrap();
            for node in &t.nodes {
                if node.kind == NodeKind::Variable {
                    level_counts[(node.depth / 2) as usize] += 1;
                }
            }
        }
        for (t, &count) in level_counts.iter().enumerate() {
            let mean = count as f64 / trials as f64;
            let target = (d * (k as f64 - 1.0)).powi(t as i32);
            // Variance of the level population grows with t; stay generous.
            let tol = 4.0 * (target.max(1.0) * 4.0 / trials as f64).sqrt();
            assert!(
                (mean - target).abs() < tol,
                "level {t}: mean {mean} target {target}"
            );
        }
    }

    #[test]
    fn tree_formula_structure() {
        let t = sample_gw_tree(1.0, 3, 0, 2).unwrap();
        let f = tree_to_formula(&t);
        assert_eq!((f.num_vars(), f.num_clauses()), (1, 0));

        // Hand-built star: root, one clause, two children.
        let mut tree = sample_gw_tree(0.0, 3, 1, 2).unwrap();
        tree.nodes[0].children.push(1);
        tree.nodes.push(GWNode {
            id: 1,
            kind: NodeKind::Clause,
            parent: Some(0),
            parent_sign: 1,
            children: vec![2, 3],
            label: 0.1,
            depth: 1,
        });
        for (id, sign) in [(2u32, -1i8), (3, 1)] {
            tree.nodes.push(GWNode {
                id,
                kind: NodeKind::Variable,
                parent: Some(1),
                parent_sign: sign,
                children: Vec::new(),
                label: id as f64,
                depth: 2,
            });
        }
        let f = tree_to_formula(&tree);
        assert_eq!((f.num_vars(), f.num_clauses()), (3, 1));
        assert_eq!(
            f.clause(0).literals(),
            &[
                Literal::positive(1),
                Literal::negative(2),
                Literal::positive(3)
            ]
        );
    }

    #[test]
    fn tree_formula_counts_preserved() {
        for s in 0..50 {
            let t = sample_gw_tree(1.2, 3, 2, s).unwrap();
            let f = tree_to_formula(&t);
            assert_eq!(f.num_vars() as usize, t.num_variables());
            assert_eq!(f.num_clauses(), t.num_clauses());
            for c in f.clauses() {
                assert_eq!(c.len(), 3);
            }
        }
    }

    #[test]
    fn node_cap_aborts() {
        let err = sample_gw_tree_capped(3.0, 4, 12, 1, 2_000).unwrap_err();
        assert!(matches!(err, Error::ResourceCap { .. }), "{err}");
    }
}
