//! Seeded random stream with deterministic substream derivation.
//!
//! Replicates, bootstrap resamples and imputations each run on their own
//! substream so results are reproducible under any execution order.
//! `substream(i)` is a pure function of the stream's key and `i`: it does
//! not look at (or advance) the generator position.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn expand_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

fn derive_key(key: &[u8; 32], index: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, (src, dst)) in key.chunks_exact(8).zip(out.chunks_exact_mut(8)).enumerate() {
        let word = u64::from_le_bytes(src.try_into().unwrap());
        let mut state = word ^ index.wrapping_mul(GOLDEN) ^ (i as u64).wrapping_mul(0xff51_afd7_ed55_8ccd);
        let mixed = splitmix64(&mut state) ^ splitmix64(&mut state);
        dst.copy_from_slice(&mixed.to_le_bytes());
    }
    out
}

/// Seedable pseudo-random stream (ChaCha12, 256-bit key).
#[derive(Clone, Debug)]
pub struct RngStream {
    key: [u8; 32],
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::from_key(expand_seed(seed))
    }

    fn from_key(key: [u8; 32]) -> Self {
        RngStream {
            key,
            rng: ChaCha12Rng::from_seed(key),
        }
    }

    /// Derive the `index`-th substream. Pure in (key, index): the parent's
    /// draw position is irrelevant, so the same index always yields the
    /// same substream.
    pub fn substream(&self, index: u64) -> Self {
        Self::from_key(derive_key(&self.key, index))
    }

    /// Split off a fresh child stream, advancing this stream.
    /// Consecutive splits yield independent children.
    pub fn split(&mut self) -> Self {
        let index = self.rng.random::<u64>();
        self.substream(index)
    }

    /// Standard normal draw.
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Bernoulli draw with success probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Chi-square draw with `df` degrees of freedom.
    pub fn chi_square(&mut self, df: f64) -> f64 {
        ChiSquared::new(df)
            .expect("degrees of freedom must be positive")
            .sample(&mut self.rng)
    }

    /// Uniform integer in `0..n`, for resampling rows with replacement.
    pub fn resample_index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}
