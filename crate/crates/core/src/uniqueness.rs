//! Gibbs-uniqueness machinery: the extremal boundary condition, exact
//! log-likelihood-ratio recursions on concrete trees, the typed
//! distributional operator on population triplets, the weighted W₁ metric it
//! contracts under, and the empirical contraction experiment.
//!
//! Log-likelihood ratios live in (−∞, +∞]; f64 carries the extended values
//! natively. The recursion degeneracies are exactly the admissible ones: a
//! +∞ grandchild either kills its clause factor (opposite sign) or produces
//! a +∞ summand (matching sign). Any other indeterminate combination, meaning a
//! −∞ summand or a NaN, is impossible by construction and reported as an
//! internal error.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gen::{variable_indices, GWTree, NodeKind};
use crate::popdyn::{w1_slices, Population, Support, CLAMP_LO};
use crate::rng::Rng;
use crate::thresholds::contraction_constant;

/// (1 + tanh(z/2))/2, mapping log-likelihood ratios to probabilities; honours
/// ±∞ endpoints.
#[inline]
pub fn gamma(z: f64) -> f64 {
    (1.0 + (z / 2.0).tanh()) / 2.0
}

/// log(p / (1-p)), the inverse of [`gamma`].
#[inline]
pub fn gamma_inv(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Γ(z₁,…,z_q) = ∏ (1 + tanh(z_i/2))/2; the empty product is one, a +∞
/// argument contributes a factor one and a −∞ argument annihilates.
pub fn gamma_fn(zs: &[f64]) -> f64 {
    zs.iter().map(|&z| gamma(z)).product()
}

/// Default truncation of ±∞ log-likelihood samples inside the metric.
pub const DEFAULT_TRUNCATION: f64 = 50.0;

/// Support (−∞, ∞] for the mixed coordinate.
pub const SUPPORT_ALL: Support = Support {
    lo: -f64::MAX,
    hi: f64::INFINITY,
};
/// Support (0, ∞] for the purely-positive coordinate.
pub const SUPPORT_PLUS: Support = Support {
    lo: CLAMP_LO,
    hi: f64::INFINITY,
};
/// Support (−∞, 0] for the purely-negative coordinate.
pub const SUPPORT_MINUS: Support = Support {
    lo: -f64::MAX,
    hi: 0.0,
};

/// The extremal (nudging) boundary condition τ⁺: +1 at the root; a variable
/// `w` below clause `a` with grandparent `u` satisfies `a` precisely when
/// setting `u` to its designated value does not. Returned per arena node id
/// (clause slots hold 0).
pub fn extremal_boundary(tree: &GWTree) -> Vec<i8> {
    let mut tau = vec![0i8; tree.nodes.len()];
    tau[0] = 1;
    // Arena order is top-down, so parents are decided first.
    for node in &tree.nodes {
        if node.kind != NodeKind::Clause {
            continue;
        }
        let u = node.parent.expect("clause has a parent") as usize;
        let nudge_needed = node.parent_sign != tau[u];
        for &w in &node.children {
            let child_sign = tree.nodes[w as usize].parent_sign;
            tau[w as usize] = if nudge_needed {
                child_sign
            } else {
                -child_sign
            };
        }
    }
    tau
}

/// τ⁺ as an assignment of the tree formula (indexed by variable, 1-based
/// slot v-1), for satisfaction checks.
pub fn extremal_assignment(tree: &GWTree) -> Vec<i8> {
    let tau = extremal_boundary(tree);
    let index = variable_indices(tree);
    let mut assignment = vec![0i8; tree.num_variables()];
    for node in &tree.nodes {
        if node.kind == NodeKind::Variable {
            assignment[(index[node.id as usize] - 1) as usize] = tau[node.id as usize];
        }
    }
    assignment
}

/// Boundary value fed to the depth-2ℓ variables of the η recursion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaBoundary {
    /// +∞ everywhere: the τ⁺-conditioned log-likelihood ratios η^{(ℓ)}.
    PlusInfinity,
    /// A finite truncation level M instead of +∞.
    Truncated(f64),
    /// Zero everywhere: the unconditioned ratios Θ^{(ℓ)}.
    Zero,
}

impl EtaBoundary {
    fn value(self) -> f64 {
        match self {
            EtaBoundary::PlusInfinity => f64::INFINITY,
            EtaBoundary::Truncated(m) => m,
            EtaBoundary::Zero => 0.0,
        }
    }
}

/// Per-variable log-likelihood ratios of a tree.
#[derive(Debug, Clone)]
pub struct EtaTable {
    /// Indexed by arena node id; NaN placeholders on clause slots.
    pub eta: Vec<f64>,
    pub root: f64,
}

/// Bottom-up evaluation of the log-likelihood recursion with the given
/// boundary. With [`EtaBoundary::Zero`], γ of the root value is the
/// unconditioned root marginal; with [`EtaBoundary::PlusInfinity`] it is the
/// τ⁺-conditioned one.
pub fn eta_tree(tree: &GWTree, boundary: EtaBoundary) -> Result<EtaTable> {
    let tau = extremal_boundary(tree);
    let boundary_depth = 2 * tree.depth;
    let mut eta = vec![f64::NAN; tree.nodes.len()];
    for node in tree.nodes.iter().rev() {
        if node.kind != NodeKind::Variable {
            continue;
        }
        if node.depth == boundary_depth && boundary_depth > 0 {
            eta[node.id as usize] = boundary.value();
            continue;
        }
        let mut total = 0.0;
        for &clause_id in &node.children {
            let clause = &tree.nodes[clause_id as usize];
            let eps = (tau[node.id as usize] * clause.parent_sign) as f64;
            let mut prod = 1.0;
            for &y in &clause.children {
                prod *= gamma(eps * eta[y as usize]);
            }
            // −ε·log(1−Γ); ln_1p keeps tiny Γ exact.
            let summand = -eps * (-prod).ln_1p();
            if summand == f64::NEG_INFINITY {
                return Err(Error::Internal(format!(
                    "−∞ summand at node {}: the recursion excludes this",
                    node.id
                )));
            }
            total += summand;
        }
        if total.is_nan() {
            return Err(Error::Internal(format!(
                "indeterminate log-likelihood sum at node {}",
                node.id
            )));
        }
        eta[node.id as usize] = total;
    }
    let root = eta[0];
    Ok(EtaTable { eta, root })
}

/// The four variable types of the typed operator: mixed, purely positive,
/// purely negative, childless.
pub fn type_probabilities(d: f64) -> [f64; 4] {
    let e = (-d / 2.0).exp();
    [(1.0 - e) * (1.0 - e), e * (1.0 - e), e * (1.0 - e), e * e]
}

/// Three populations carrying the typed log-likelihood distributions
/// (ρ_mixed on (−∞,∞], ρ_plus on (0,∞], ρ_minus on (−∞,0]).
#[derive(Debug, Clone)]
pub struct TypedTriplet {
    pub all: Population,
    pub plus: Population,
    pub minus: Population,
}

impl TypedTriplet {
    pub fn new(all: Population, plus: Population, minus: Population) -> Result<Self> {
        let checks = [
            (all.support(), SUPPORT_ALL),
            (plus.support(), SUPPORT_PLUS),
            (minus.support(), SUPPORT_MINUS),
        ];
        for (got, want) in checks {
            if got.lo < want.lo || got.hi > want.hi {
                return Err(Error::invalid(format!(
                    "population support [{}, {}] escapes the triplet coordinate [{}, {}]",
                    got.lo, got.hi, want.lo, want.hi
                )));
            }
        }
        Ok(TypedTriplet { all, plus, minus })
    }

    /// Clamps raw sample vectors onto the three coordinate supports.
    pub fn clamped(all: Vec<f64>, plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        Ok(TypedTriplet {
            all: Population::clamped(all, SUPPORT_ALL)?,
            plus: Population::clamped(plus, SUPPORT_PLUS)?,
            minus: Population::clamped(minus, SUPPORT_MINUS)?,
        })
    }

    fn sorted_samples(&self) -> [Vec<f64>; 3] {
        let mut out = [
            self.all.samples().to_vec(),
            self.plus.samples().to_vec(),
            self.minus.samples().to_vec(),
        ];
        for v in &mut out {
            v.sort_unstable_by(f64::total_cmp);
        }
        out
    }
}

/// Index-coupled draws from two triplets whose coordinates have been sorted:
/// sharing the index realises the comonotone (W₁-optimal) coupling on each
/// coordinate.
struct PairedDraws<'a> {
    a: &'a [Vec<f64>; 3],
    b: &'a [Vec<f64>; 3],
}

impl PairedDraws<'_> {
    #[inline]
    fn draw(&self, coord: usize, rng: &mut Rng) -> (f64, f64) {
        let idx = rng.below(self.a[coord].len() as u64) as usize;
        // Both sides share the length check: coupled triplets are built with
        // equal coordinate sizes.
        (self.a[coord][idx], self.b[coord][idx])
    }
}

/// k−1 categorical trials over (p_mixed, p_plus, p_minus, p_childless).
fn draw_type_counts(rng: &mut Rng, probs: &[f64; 4], trials: usize) -> [usize; 4] {
    let mut counts = [0usize; 4];
    for _ in 0..trials {
        let u = rng.f64();
        let mut acc = 0.0;
        let mut cat = 3;
        for (c, &p) in probs.iter().enumerate().take(3) {
            acc += p;
            if u < acc {
                cat = c;
                break;
            }
        }
        counts[cat] += 1;
    }
    counts
}

/// log Ξ for one clause in both coupled realisations: the childless slots
/// contribute 2^{-r₃}, each typed slot a γ factor of the drawn sample.
fn log_xi_pair(
    eps: f64,
    counts: &[usize; 4],
    draws: &PairedDraws<'_>,
    rng: &mut Rng,
) -> (f64, f64) {
    let base = 2f64.powi(-(counts[3] as i32));
    let mut ta = base;
    let mut tb = base;
    for (coord, &reps) in counts.iter().enumerate().take(3) {
        for _ in 0..reps {
            let (xa, xb) = draws.draw(coord, rng);
            ta *= gamma(eps * xa);
            tb *= gamma(eps * xb);
        }
    }
    ((-ta).ln_1p(), (-tb).ln_1p())
}

fn triplet_from_raw(all: Vec<f64>, plus: Vec<f64>, minus: Vec<f64>) -> Result<TypedTriplet> {
    TypedTriplet::clamped(all, plus, minus)
}

/// One application of the typed operator to two triplets under fully shared
/// randomness: identical truncated-Poisson clause counts, identical type
/// vectors, and index-paired sample draws after sorting.
pub fn ll_star_step_coupled(
    a: &TypedTriplet,
    b: &TypedTriplet,
    d: f64,
    k: usize,
    n_out: usize,
    seed: u64,
) -> Result<(TypedTriplet, TypedTriplet)> {
    if d <= 0.0 {
        return Err(Error::invalid(format!("density d={d} must be positive")));
    }
    for (x, y) in [
        (a.all.len(), b.all.len()),
        (a.plus.len(), b.plus.len()),
        (a.minus.len(), b.minus.len()),
    ] {
        if x != y {
            return Err(Error::invalid(
                "coupled triplets need matching coordinate sizes",
            ));
        }
    }
    let sorted_a = a.sorted_samples();
    let sorted_b = b.sorted_samples();
    let draws = PairedDraws {
        a: &sorted_a,
        b: &sorted_b,
    };
    let probs = type_probabilities(d);
    let root = Rng::new(seed).fork(0x6c6c73746172); // "llstar"

    // coord 0: mixed (ε=+1 then ε=−1 blocks); 1: plus (ε=+1); 2: minus (ε=−1).
    let mut out_a: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut out_b: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for coord in 0..3 {
        let stream = root.fork(coord as u64);
        let pairs: Vec<(f64, f64)> = (0..n_out)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.fork(i as u64);
                let mut va = 0.0;
                let mut vb = 0.0;
                if coord == 0 || coord == 1 {
                    let clauses = rng.poisson_positive(d / 2.0);
                    for _ in 0..clauses {
                        let counts = draw_type_counts(&mut rng, &probs, k - 1);
                        let (xa, xb) = log_xi_pair(1.0, &counts, &draws, &mut rng);
                        va -= xa;
                        vb -= xb;
                    }
                }
                if coord == 0 || coord == 2 {
                    let clauses = rng.poisson_positive(d / 2.0);
                    for _ in 0..clauses {
                        let counts = draw_type_counts(&mut rng, &probs, k - 1);
                        let (xa, xb) = log_xi_pair(-1.0, &counts, &draws, &mut rng);
                        va += xa;
                        vb += xb;
                    }
                }
                (va, vb)
            })
            .collect();
        out_a[coord] = pairs.iter().map(|&(x, _)| x).collect();
        out_b[coord] = pairs.iter().map(|&(_, y)| y).collect();
    }
    let [a_all, a_plus, a_minus] = out_a;
    let [b_all, b_plus, b_minus] = out_b;
    Ok((
        triplet_from_raw(a_all, a_plus, a_minus)?,
        triplet_from_raw(b_all, b_plus, b_minus)?,
    ))
}

/// One application of the typed operator LL⋆ to a triplet.
pub fn ll_star_step(
    triplet: &TypedTriplet,
    d: f64,
    k: usize,
    n_out: usize,
    seed: u64,
) -> Result<TypedTriplet> {
    let (out, _) = ll_star_step_coupled(triplet, triplet, d, k, n_out, seed)?;
    Ok(out)
}

/// The untyped single-distribution operator (the merged-type call path): each
/// sample is −Σ_{i≤Po(d)} s_i log(1 − Γ(s_i · (k−1 draws))).
pub fn ll_plus_step(
    rho: &Population,
    d: f64,
    k: usize,
    n_out: usize,
    seed: u64,
) -> Result<Population> {
    if d < 0.0 {
        return Err(Error::invalid(format!("density d={d} must be >= 0")));
    }
    let root = Rng::new(seed).fork(0x6c6c70); // "llp"
    let samples: Vec<f64> = (0..n_out)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.fork(i as u64);
            let clauses = rng.poisson(d);
            let mut total = 0.0;
            for _ in 0..clauses {
                let s = rng.sign() as f64;
                let mut prod = 1.0;
                for _ in 0..k - 1 {
                    prod *= gamma(s * rho.draw(&mut rng));
                }
                total -= s * (-prod).ln_1p();
            }
            total
        })
        .collect();
    Population::clamped(samples, SUPPORT_ALL)
}

/// dist_t of two triplets with diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct DistResult {
    pub value: f64,
    /// Samples clipped by the ±M truncation before sorting.
    pub truncated_samples: usize,
}

/// The weighted metric (1−e^{−t/2})·W₁(ρ_•) + e^{−t/2}·(W₁(ρ_⊕) + W₁(ρ_⊖)),
/// truncating every sample to [−M, M] first (±∞ must be finitised before the
/// order statistics pair up).
pub fn dist_metric_truncated(a: &TypedTriplet, b: &TypedTriplet, t: f64, m: f64) -> DistResult {
    let mut truncated = 0usize;
    let mut clip = |xs: &[f64]| -> Vec<f64> {
        xs.iter()
            .map(|&x| {
                if x.abs() > m {
                    truncated += 1;
                    x.clamp(-m, m)
                } else {
                    x
                }
            })
            .collect()
    };
    let pairs = [
        (clip(a.all.samples()), clip(b.all.samples())),
        (clip(a.plus.samples()), clip(b.plus.samples())),
        (clip(a.minus.samples()), clip(b.minus.samples())),
    ];
    let w_all = -(-t / 2.0).exp_m1();
    let w_pure = (-t / 2.0).exp();
    let value = w_all * w1_slices(&pairs[0].0, &pairs[0].1)
        + w_pure * w1_slices(&pairs[1].0, &pairs[1].1)
        + w_pure * w1_slices(&pairs[2].0, &pairs[2].1);
    DistResult {
        value,
        truncated_samples: truncated,
    }
}

pub fn dist_metric(a: &TypedTriplet, b: &TypedTriplet, t: f64) -> f64 {
    dist_metric_truncated(a, b, t, DEFAULT_TRUNCATION).value
}

/// Outcome of the empirical contraction experiment.
#[derive(Debug, Clone)]
pub struct ContractionReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    /// The analytic constant c(d,k); contraction requires it below one.
    pub constant: f64,
    /// Trials skipped because the input distance degenerated to zero.
    pub skipped: usize,
    pub truncation: f64,
}

/// Samples random triplet pairs (shifted exponentials on the three supports),
/// applies the coupled operator, and reports dist_d(out)/dist_d(in) per
/// trial together with the analytic contraction constant.
pub fn contraction_estimate(
    d: f64,
    k: usize,
    n_pop: usize,
    trials: usize,
    seed: u64,
) -> Result<ContractionReport> {
    contraction_estimate_truncated(d, k, n_pop, trials, seed, DEFAULT_TRUNCATION)
}

pub fn contraction_estimate_truncated(
    d: f64,
    k: usize,
    n_pop: usize,
    trials: usize,
    seed: u64,
    truncation: f64,
) -> Result<ContractionReport> {
    let root = Rng::new(seed).fork(0x636f6e7472); // "contr"
    let mut ratios = Vec::with_capacity(trials);
    let mut skipped = 0usize;
    for trial in 0..trials {
        let mut rng = root.fork(trial as u64);
        let a = random_triplet(&mut rng, n_pop)?;
        let b = random_triplet(&mut rng, n_pop)?;
        let din = dist_metric_truncated(&a, &b, d, truncation).value;
        if din < 1e-12 {
            skipped += 1;
            continue;
        }
        let mut step_seed = root.fork(0x1000 + trial as u64);
        let (oa, ob) = ll_star_step_coupled(&a, &b, d, k, n_pop, step_seed.next_u64())?;
        let dout = dist_metric_truncated(&oa, &ob, d, truncation).value;
        ratios.push(dout / din);
    }
    let max_ratio = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(ContractionReport {
        ratios,
        max_ratio,
        constant: contraction_constant(d, k),
        skipped,
        truncation,
    })
}

/// A random triplet from shifted exponentials respecting the three supports.
fn random_triplet(rng: &mut Rng, n: usize) -> Result<TypedTriplet> {
    let exp = |rng: &mut Rng, scale: f64| -> f64 { -rng.f64_open().ln() * scale };
    let shift = rng.f64() * 4.0 - 2.0;
    let scale_all = 0.5 + 1.5 * rng.f64();
    let scale_plus = 0.5 + 1.5 * rng.f64();
    let scale_minus = 0.5 + 1.5 * rng.f64();
    let all = (0..n).map(|_| shift + exp(rng, scale_all)).collect();
    let plus = (0..n).map(|_| exp(rng, scale_plus)).collect();
    let minus = (0..n).map(|_| -exp(rng, scale_minus)).collect();
    TypedTriplet::clamped(all, plus, minus)
}

/// ψ_λ(w), φ_λ(w) = ψ_λ(w) + ψ_λ(1−w), and the maximum φ_λ(1/2).
#[derive(Debug, Clone, Copy)]
pub struct PsiPhi {
    pub psi: f64,
    pub phi: f64,
    pub phi_max: f64,
}

pub fn psi_phi(lambda: f64, w: f64) -> Result<PsiPhi> {
    if !(0.0 < lambda && lambda <= 1.0) {
        return Err(Error::invalid(format!("lambda={lambda} outside (0,1]")));
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::invalid(format!("w={w} outside [0,1]")));
    }
    let psi = |w: f64| -> f64 {
        let denom = 1.0 - lambda * w;
        if denom == 0.0 {
            // λ = w = 1: ψ₁(w) = w.
            return w;
        }
        lambda * w / denom * (1.0 - w)
    };
    Ok(PsiPhi {
        psi: psi(w),
        phi: psi(w) + psi(1.0 - w),
        phi_max: (lambda / 2.0) / (1.0 - lambda / 2.0),
    })
}

/// Summary of |γ(η_root) − γ(Θ_root)| at one depth.
#[derive(Debug, Clone, Copy)]
pub struct DepthGapStats {
    pub depth: u32,
    pub mean_gap: f64,
    pub q95: f64,
    pub min_gap: f64,
    pub trials: usize,
}

/// Monte Carlo gap between the τ⁺-conditioned and unconditioned root
/// marginals at depths 1..=max_depth.
pub fn boundary_influence_experiment(
    d: f64,
    k: usize,
    max_depth: u32,
    trials: usize,
    seed: u64,
) -> Result<Vec<DepthGapStats>> {
    let root = Rng::new(seed).fork(0x676170); // "gap"
    let mut out = Vec::with_capacity(max_depth as usize);
    for depth in 1..=max_depth {
        let stream = root.fork(depth as u64);
        let gaps: Vec<Result<f64>> = (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.fork(i as u64);
                let tree = crate::gen::sample_gw_tree(d, k, depth, rng.next_u64())?;
                let conditioned = eta_tree(&tree, EtaBoundary::PlusInfinity)?.root;
                let unconditioned = eta_tree(&tree, EtaBoundary::Zero)?.root;
                Ok(gamma(conditioned) - gamma(unconditioned))
            })
            .collect();
        let mut values = Vec::with_capacity(trials);
        for g in gaps {
            values.push(g?);
        }
        let mean_gap = values.iter().sum::<f64>() / trials as f64;
        let min_gap = values.iter().copied().fold(f64::INFINITY, f64::min);
        let mut sorted = values;
        sorted.sort_unstable_by(f64::total_cmp);
        let q95 = sorted[((0.95 * trials as f64).ceil() as usize).min(trials) - 1];
        out.push(DepthGapStats {
            depth,
            mean_gap,
            q95,
            min_gap,
            trials,
        });
    }
    Ok(out)
}
