//! Counter-based deterministic random streams.
//!
//! Every sampler in this crate draws from a [`Rng`] that is a pure function of
//! a seed and a chain of `fork` labels. Forking never advances the parent, so
//! per-clause / per-node / per-sample substreams can be derived in any order
//! (and hence in parallel) while producing bit-identical results. All
//! distributions are implemented here rather than pulled from a crate so the
//! sequences are stable across platforms and dependency upgrades.

use std::collections::HashMap;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A seeded stream of pseudo-random values with cheap named substreams.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            state: mix(seed ^ 0x5851_F42D_4C95_7F2D),
        }
    }

    /// Derives the substream named `label` from the current state without
    /// advancing this stream. Equal `(state, label)` pairs give equal streams.
    #[must_use]
    pub fn fork(&self, label: u64) -> Rng {
        Rng {
            state: mix(self.state ^ mix(label.wrapping_mul(GOLDEN) ^ 0x1F83_D9AB_FB41_BD6B)),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform on `[0, 1)` with 53-bit resolution.
    #[inline]
    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn f64_open(&mut self) -> f64 {
        ((self.next_u64() >> 12) as f64 + 0.5) * (1.0 / 4_503_599_627_370_496.0)
    }

    /// Uniform ±1.
    #[inline]
    pub fn sign(&mut self) -> i8 {
        if self.next_u64() & 1 == 0 {
            1
        } else {
            -1
        }
    }

    /// Uniform on `0..n` without modulo bias.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "below(0)");
        let zone = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % n;
            }
        }
    }

    /// Standard normal via Box-Muller (two uniforms per value, no caching).
    pub fn gaussian(&mut self) -> f64 {
        let u1 = self.f64_open();
        let u2 = self.f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Poisson sample: inversion for small means, PTRS rejection above.
    pub fn poisson(&mut self, mean: f64) -> u64 {
        assert!(mean >= 0.0 && mean.is_finite(), "poisson mean {mean}");
        if mean == 0.0 {
            0
        } else if mean < 30.0 {
            self.poisson_inversion(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    /// Poisson conditioned on being at least 1, by inversion over the
    /// truncated distribution.
    pub fn poisson_positive(&mut self, mean: f64) -> u64 {
        assert!(
            mean > 0.0 && mean < 30.0,
            "truncated poisson mean {mean} out of supported range"
        );
        let u = self.f64();
        // p_k = mean^k / (k! (e^mean - 1)) for k >= 1.
        let mut k = 1u64;
        let mut p = mean / mean.exp_m1();
        let mut cdf = p;
        while u >= cdf && k < 500 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    fn poisson_inversion(&mut self, mean: f64) -> u64 {
        let u = self.f64();
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        while u >= cdf && k < 500 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        k
    }

    /// Hörmann's PTRS transformed-rejection sampler, valid for mean >= 10.
    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let log_mean = mean.ln();
        let b = 0.931 + 2.53 * mean.sqrt();
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u = self.f64() - 0.5;
            let v = self.f64();
            let us = 0.5 - u.abs();
            let kf = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return kf as u64;
            }
            if kf < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let k = kf as u64;
            if (v * inv_alpha / (a / (us * us) + b)).ln() <= kf * log_mean - mean - ln_factorial(k)
            {
                return k;
            }
        }
    }

    /// `k` distinct values uniform over `0..n`, by partial Fisher-Yates over a
    /// sparse virtual array.
    pub fn distinct_indices(&mut self, n: u64, k: usize) -> Vec<u64> {
        assert!(k as u64 <= n, "cannot draw {k} distinct values below {n}");
        let mut displaced: HashMap<u64, u64> = HashMap::new();
        let mut out = Vec::with_capacity(k);
        for i in 0..k as u64 {
            let j = i + self.below(n - i);
            let vi = displaced.get(&i).copied().unwrap_or(i);
            let vj = displaced.get(&j).copied().unwrap_or(j);
            out.push(vj);
            displaced.insert(j, vi);
        }
        out
    }
}

/// ln(k!): exact cumulative sum below 256, Stirling series beyond.
pub fn ln_factorial(k: u64) -> f64 {
    const TABLE_LEN: usize = 256;
    static TABLE: std::sync::OnceLock<Vec<f64>> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = vec![0.0; TABLE_LEN];
        for i in 2..TABLE_LEN {
            t[i] = t[i - 1] + (i as f64).ln();
        }
        t
    });
    if (k as usize) < TABLE_LEN {
        return table[k as usize];
    }
    let x = k as f64;
    (x + 0.5) * x.ln() - x + 0.5 * std::f64::consts::TAU.ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x * x * x)
}
