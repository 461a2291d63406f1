//! The iid driving system: two-sided symbol sequences with deterministic,
//! parallel-safe seeding.
//!
//! Symbols are generated counter-based: the symbol at absolute index `j` is a
//! pure function of `(seed, j)` (hash to a uniform, then inverse CDF over the
//! probability vector). This gives two-sided indexing (pullback constructions
//! need negative indices) and bit-identical output regardless of evaluation
//! order or worker count. Sequential RNG streams cannot offer either.

use crate::error::{Error, Result};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash of `(seed, index)`; the counter-based primitive everything else
/// builds on.
#[inline]
pub fn hash_index(seed: u64, index: i64) -> u64 {
    mix64(seed.wrapping_add((index as u64).wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform in `[0,1)` from 53 bits of `hash_index(seed, index)`.
#[inline]
pub fn uniform_at(seed: u64, index: i64) -> f64 {
    (hash_index(seed, index) >> 11) as f64 * (1.0 / 9007199254740992.0)
}

/// Derive an independent substream seed, used for per-trial and per-purpose
/// streams (`hash(master_seed, trial_index)` in the experiment layer).
#[inline]
pub fn substream(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag.wrapping_add(GOLDEN_GAMMA)))
}

/// Sequential counter-based uniform stream. State is just `(seed, counter)`,
/// so cloning or replaying is trivial and the stream for a given seed is
/// identical however it is consumed.
#[derive(Debug, Clone)]
pub struct CounterRng {
    seed: u64,
    counter: i64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed, counter: 0 }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = hash_index(self.seed, self.counter);
        self.counter += 1;
        v
    }

    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
    }
}

/// A finite window of a two-sided iid symbol sequence.
///
/// `symbol(j)` for `j` in the window is read from the materialized array;
/// outside it is regenerated on demand from `(seed, j + origin_offset)`,
/// which is exactly how the window itself was built, so extension is
/// invisible. `shift` moves the origin without touching symbol identities.
#[derive(Debug, Clone)]
pub struct OmegaPath {
    probs: Vec<f64>,
    cum: Vec<f64>,
    seed: u64,
    lo: i64,
    hi: i64,
    origin_offset: i64,
    window: Vec<u8>,
}

fn validate_probs(probs: &[f64]) -> Result<Vec<f64>> {
    if probs.is_empty() {
        return Err(Error::InvalidProbabilities("empty vector".into()));
    }
    if probs.len() > 64 {
        return Err(Error::InvalidProbabilities(format!(
            "at most 64 maps supported, got {}",
            probs.len()
        )));
    }
    if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(Error::InvalidProbabilities("entries must be nonnegative".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidProbabilities(format!("sum is {sum}, must be 1 +- 1e-12")));
    }
    let mut cum = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cum.push(acc);
    }
    *cum.last_mut().unwrap() = 1.0;
    Ok(cum)
}

#[inline]
fn symbol_from_uniform(cum: &[f64], u: f64) -> u8 {
    // linear scan; m is small
    for (i, &c) in cum.iter().enumerate() {
        if u < c {
            return i as u8;
        }
    }
    (cum.len() - 1) as u8
}

impl OmegaPath {
    /// Sample a window `[lo, hi)` of iid symbols with law `probs`.
    /// Requires `lo <= 0 < hi`.
    pub fn sample(probs: &[f64], seed: u64, lo: i64, hi: i64) -> Result<Self> {
        if !(lo <= 0 && 0 < hi) {
            return Err(Error::Domain(format!("window must satisfy lo <= 0 < hi, got [{lo}, {hi})")));
        }
        let cum = validate_probs(probs)?;
        let window = (lo..hi).map(|j| symbol_from_uniform(&cum, uniform_at(seed, j))).collect();
        Ok(OmegaPath {
            probs: probs.to_vec(),
            cum,
            seed,
            lo,
            hi,
            origin_offset: 0,
            window,
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Current window bounds (in shifted coordinates).
    pub fn window_bounds(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn origin_offset(&self) -> i64 {
        self.origin_offset
    }

    /// Symbol at index `j` (relative to the current origin). Indices outside
    /// the materialized window are regenerated counter-based, so this is
    /// total and pure.
    #[inline]
    pub fn symbol(&self, j: i64) -> usize {
        if j >= self.lo && j < self.hi {
            self.window[(j - self.lo) as usize] as usize
        } else {
            symbol_from_uniform(&self.cum, uniform_at(self.seed, j + self.origin_offset)) as usize
        }
    }

    /// Error if the materialized window does not cover `[need_lo, need_hi)`.
    /// Orbit code calls this so that accidental out-of-window access is loud
    /// rather than silently regenerated in hot loops.
    pub fn require_window(&self, need_lo: i64, need_hi: i64) -> Result<()> {
        if need_lo >= self.lo && need_hi <= self.hi {
            Ok(())
        } else {
            Err(Error::WindowTooShort {
                need_lo,
                need_hi,
                have_lo: self.lo,
                have_hi: self.hi,
            })
        }
    }

    /// Shifted path: symbol at new index `j` equals the old symbol at `j + k`.
    pub fn shift(&self, k: i64) -> Self {
        let mut out = self.clone();
        out.origin_offset += k;
        out.lo -= k;
        out.hi -= k;
        out
    }

    /// Same path with the materialized window grown to cover `[lo, hi)`
    /// (union with the current window).
    pub fn extend(&self, lo: i64, hi: i64) -> Self {
        let new_lo = lo.min(self.lo);
        let new_hi = hi.max(self.hi);
        if new_lo == self.lo && new_hi == self.hi {
            return self.clone();
        }
        let window = (new_lo..new_hi)
            .map(|j| symbol_from_uniform(&self.cum, uniform_at(self.seed, j + self.origin_offset)) as u8)
            .collect();
        let mut out = self.clone();
        out.lo = new_lo;
        out.hi = new_hi;
        out.window = window;
        out
    }

    /// The symbols at indices `range.start..range.end` as a plain vector
    /// (a convenience for hot orbit loops).
    pub fn symbols(&self, lo: i64, hi: i64) -> Vec<u8> {
        (lo..hi).map(|j| self.symbol(j) as u8).collect()
    }
}
