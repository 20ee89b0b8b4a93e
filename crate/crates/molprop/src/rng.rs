//! Deterministic pseudo-random numbers.
//!
//! Everything stochastic in the crate (weight init, shuffles, dropout masks,
//! TPE sampling) draws from [`Rng`], a splitmix64 generator. Streams are
//! derived by hashing a seed together with integer tags, so a dropout mask is
//! a pure function of `(seed, epoch, batch)` and runs are reproducible
//! across platforms.

/// 64-bit finalizer used for both random streams and fingerprint hashing.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Hash a sequence of words into one 64-bit value.
pub fn hash_words(words: &[u64]) -> u64 {
    let mut acc = 0x243f6a8885a308d3u64; // pinned so fingerprints never drift
    for &w in words {
        acc = mix64(acc ^ w);
    }
    acc
}

/// Splitmix64 stream.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Independent stream for a (seed, tags...) coordinate.
    pub fn stream(seed: u64, tags: &[u64]) -> Self {
        let mut words = Vec::with_capacity(tags.len() + 1);
        words.push(seed);
        words.extend_from_slice(tags);
        Rng::new(hash_words(&words))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in [0, n). Rejection-free modulo is fine here; n is
    /// tiny compared to 2^64 so the bias is immaterial.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = self.next_f64().max(f64::MIN_POSITIVE);
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}
