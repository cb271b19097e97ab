//! Population dynamics for the Belief Propagation operator, Bethe free
//! entropy estimation (sharp and finite temperature), and exact W₁ distances
//! between empirical measures on the line.
//!
//! A population is a fixed-size multiset of f64 samples standing in for a
//! probability measure. One sweep resamples with replacement: every output
//! sample draws its own Poisson degrees and input samples from a private
//! substream, so sweeps parallelise without changing the result.

use std::io::{Read, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Smallest sample value kept after clamping.
pub const CLAMP_LO: f64 = 1e-300;
/// Largest value below 1.0 (1 − 2⁻⁵³); the nominal 1 − 1e−300 is not
/// representable, so the clamp uses the f64 predecessor of one.
pub const CLAMP_HI: f64 = 1.0 - f64::EPSILON / 2.0;

/// A closed interval (bounds may be infinite) that samples are clamped to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const UNIT_OPEN: Support = Support {
        lo: CLAMP_LO,
        hi: CLAMP_HI,
    };

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// A fixed-size multiset of samples representing a measure on its support.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    samples: Vec<f64>,
    support: Support,
}

impl Population {
    pub fn new(samples: Vec<f64>, support: Support) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid(
                "population must contain at least one sample",
            ));
        }
        for &x in &samples {
            if x.is_nan() || !support.contains(x) {
                return Err(Error::invalid(format!(
                    "sample {x} outside declared support [{}, {}]",
                    support.lo, support.hi
                )));
            }
        }
        Ok(Population { samples, support })
    }

    /// Builds from raw values, clamping everything into the support.
    pub fn clamped(samples: Vec<f64>, support: Support) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid(
                "population must contain at least one sample",
            ));
        }
        let samples = samples.into_iter().map(|x| support.clamp(x)).collect();
        Ok(Population { samples, support })
    }

    pub fn constant(value: f64, n: usize, support: Support) -> Result<Self> {
        Population::new(vec![value; n], support)
    }

    /// δ_{1/2} as a population on (0,1).
    pub fn delta_half(n: usize) -> Self {
        Population::constant(0.5, n, Support::UNIT_OPEN).expect("1/2 lies in (0,1)")
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    #[inline]
    pub fn draw(&self, rng: &mut Rng) -> f64 {
        self.samples[rng.below(self.samples.len() as u64) as usize]
    }

    /// Little-endian raw f64 dump.
    pub fn write_raw<W: Write>(&self, writer: &mut W) -> Result<()> {
        for &x in &self.samples {
            writer.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_raw<R: Read>(reader: &mut R, support: Support) -> Result<Self> {
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.is_empty() || bytes.len() % 8 != 0 {
            return Err(Error::invalid(format!(
                "raw population length {} is not a positive multiple of 8",
                bytes.len()
            )));
        }
        let samples = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Population::new(samples, support)
    }
}

/// ln(1 − ∏ of k−1 population draws): one BP clause message in the log domain.
#[inline]
fn log_clause_message(pop: &Population, k: usize, rng: &mut Rng) -> f64 {
    let mut prod = 1.0;
    for _ in 0..k - 1 {
        prod *= pop.draw(rng);
    }
    (-prod).ln_1p()
}

/// One output sample of the BP operator given the two Poisson degrees.
fn bp_value(pop: &Population, k: usize, d_minus: u64, d_plus: u64, rng: &mut Rng) -> f64 {
    let mut s_minus = 0.0;
    for _ in 0..d_minus {
        s_minus += log_clause_message(pop, k, rng);
    }
    let mut s_plus = 0.0;
    for _ in 0..d_plus {
        s_plus += log_clause_message(pop, k, rng);
    }
    Support::UNIT_OPEN.clamp(1.0 / (1.0 + (s_plus - s_minus).exp()))
}

/// One sweep of the Belief Propagation operator: N fresh samples, each from
/// Po(d/2) clause products on either side, evaluated in the log domain.
pub fn bp_step(pop: &Population, d: f64, k: usize, n_out: usize, seed: u64) -> Result<Population> {
    if !Support::UNIT_OPEN.contains(pop.support().lo)
        || !Support::UNIT_OPEN.contains(pop.support().hi)
    {
        return Err(Error::invalid("population support must lie inside (0,1)"));
    }
    let root = Rng::new(seed).fork(0x6270); // "bp"
    let samples: Vec<f64> = (0..n_out)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.fork(i as u64);
            let d_minus = rng.poisson(d / 2.0);
            let d_plus = rng.poisson(d / 2.0);
            bp_value(pop, k, d_minus, d_plus, &mut rng)
        })
        .collect();
    Population::new(samples, Support::UNIT_OPEN)
}

/// Result of iterating the BP operator from δ_{1/2}.
#[derive(Debug, Clone)]
pub struct IterateResult {
    pub population: Population,
    /// W₁ between consecutive sweeps, one entry per iteration.
    pub w1_trace: Vec<f64>,
}

pub fn iterate(d: f64, k: usize, n: usize, iters: u32, seed: u64) -> Result<IterateResult> {
    let root = Rng::new(seed).fork(0x69746572); // "iter"
    let mut pop = Population::delta_half(n);
    let mut w1_trace = Vec::with_capacity(iters as usize);
    for it in 0..iters {
        let mut label = root.fork(it as u64);
        let next = bp_step(&pop, d, k, n, label.next_u64())?;
        w1_trace.push(w1(&pop, &next));
        pop = next;
    }
    Ok(IterateResult {
        population: pop,
        w1_trace,
    })
}

/// A Monte Carlo Bethe free entropy estimate.
#[derive(Debug, Clone)]
pub struct BetheEstimate {
    pub value: f64,
    pub std_error: f64,
    pub mc_samples: usize,
    /// Mean of the clause term E[log(1 − ∏_{j≤k} μ_j)].
    pub clause_term: f64,
    /// Mean of the variable term E[log(∏ μ⁻ + ∏ μ⁺)].
    pub variable_term: f64,
    /// Clause-term samples discarded because the product reached 1.
    pub degenerate_samples: usize,
}

fn estimate_bethe(
    pop: &Population,
    d: f64,
    k: usize,
    mc_samples: usize,
    seed: u64,
    beta: Option<f64>,
) -> Result<BetheEstimate> {
    if mc_samples == 0 {
        return Err(Error::invalid("mc_samples must be positive"));
    }
    let coef = d * (k as f64 - 1.0) / k as f64;
    // 1 − e^{-β}: the clause-softening weight; 1.0 recovers the hard model.
    let soft = beta.map_or(1.0, |b| -(-b).exp_m1());
    let root = Rng::new(seed).fork(0x6265746865); // "bethe"
    let pairs: Vec<(f64, f64)> = (0..mc_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = root.fork(i as u64);
            let d_minus = rng.poisson(d / 2.0);
            let d_plus = rng.poisson(d / 2.0);
            let mut s_minus = 0.0;
            for _ in 0..d_minus {
                let mut prod = 1.0;
                for _ in 0..k - 1 {
                    prod *= pop.draw(&mut rng);
                }
                s_minus += (-soft * prod).ln_1p();
            }
            let mut s_plus = 0.0;
            for _ in 0..d_plus {
                let mut prod = 1.0;
                for _ in 0..k - 1 {
                    prod *= pop.draw(&mut rng);
                }
                s_plus += (-soft * prod).ln_1p();
            }
            // log(e^{s-} + e^{s+}), stabilised.
            let hi = s_minus.max(s_plus);
            let variable = hi + ((s_minus - hi).exp() + (s_plus - hi).exp()).ln();

            let mut prod = 1.0;
            for _ in 0..k {
                prod *= pop.draw(&mut rng);
            }
            let clause = (-soft * prod).ln_1p();
            (variable, clause)
        })
        .collect();

    let mut degenerate = 0usize;
    let variable_values: Vec<f64> = pairs.iter().map(|&(v, _)| v).collect();
    let clause_values: Vec<f64> = pairs
        .iter()
        .filter_map(|&(_, c)| {
            if c.is_finite() {
                Some(c)
            } else {
                degenerate += 1;
                None
            }
        })
        .collect();
    let (v_mean, v_se) = crate::stats::mean_and_std_error(&variable_values);
    let (c_mean, c_se) = if clause_values.is_empty() {
        (0.0, 0.0)
    } else {
        crate::stats::mean_and_std_error(&clause_values)
    };
    let std_error = (v_se * v_se + coef * coef * c_se * c_se).sqrt();
    let value = v_mean - coef * c_mean;
    Ok(BetheEstimate {
        value,
        std_error,
        mc_samples,
        clause_term: c_mean,
        variable_term: v_mean,
        degenerate_samples: degenerate,
    })
}

/// Monte Carlo estimate of the Bethe free entropy 𝔅_{d,k}(π) from a
/// population representing π.
pub fn bethe(
    pop: &Population,
    d: f64,
    k: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<BetheEstimate> {
    estimate_bethe(pop, d, k, mc_samples, seed, None)
}

/// The finite-temperature interpolation functional; converges to [`bethe`]
/// as β → ∞.
pub fn bethe_beta(
    pop: &Population,
    d: f64,
    k: usize,
    beta: f64,
    mc_samples: usize,
    seed: u64,
) -> Result<BetheEstimate> {
    if beta.is_nan() || beta <= 0.0 {
        return Err(Error::invalid(format!("beta={beta} must be > 0")));
    }
    estimate_bethe(pop, d, k, mc_samples, seed, Some(beta))
}

/// Exact L₁-Wasserstein distance between the empirical measures of two
/// sample sets. Equal sizes reduce to the mean absolute difference of order
/// statistics; unequal sizes integrate |F⁻¹ − G⁻¹| over the merged quantile
/// grid.
pub fn w1(a: &Population, b: &Population) -> f64 {
    w1_slices(a.samples(), b.samples())
}

pub fn w1_slices(a: &[f64], b: &[f64]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "W1 of an empty sample set");
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(f64::total_cmp);
    ys.sort_unstable_by(f64::total_cmp);
    if xs.len() == ys.len() {
        return xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).sum::<f64>() / xs.len() as f64;
    }
    let (n, m) = (xs.len() as u128, ys.len() as u128);
    let mut i = 0u128;
    let mut j = 0u128;
    let mut pos = 0u128; // current quantile, in units of 1/(n*m)
    let mut total = 0.0;
    while i < n && j < m {
        // Next breakpoints of either inverse CDF, on the common 1/(nm) grid.
        let next_i = (i + 1) * m;
        let next_j = (j + 1) * n;
        let q = next_i.min(next_j);
        total += (q - pos) as f64 * (xs[i as usize] - ys[j as usize]).abs();
        pos = q;
        if next_i == q {
            i += 1;
        }
        if next_j == q {
            j += 1;
        }
    }
    total / (n * m) as f64
}
