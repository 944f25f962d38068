//! Counter-based splittable random number generator.
//!
//! Every stream is identified by a 64-bit key; the `i`-th output is a hash of
//! `(key, i)`, so a stream is a pure function of its key and its counter.
//! Child streams are derived by hashing `(key, index)` in a separate domain,
//! which lets each (run, step, slot, factor) tuple own a reproducible
//! substream without any shared mutable state.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const SPLIT_DOMAIN: u64 = 0xD6E8_FEB8_6659_FD93;
const SEED_DOMAIN: u64 = 0xA076_1D64_78BD_642F;

/// SplitMix64 finalizer (Stafford mix 13). Bijective on u64.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A deterministic random stream. Cloning forks the counter position but
/// keeps the key; use [`RngStream::child`] to obtain an independent stream.
#[derive(Debug, Clone)]
pub struct RngStream {
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ SEED_DOMAIN),
            counter: 0,
        }
    }

    /// Derives an independent substream keyed by `index`.
    pub fn child(&self, index: u64) -> Self {
        let key = mix64(
            mix64(self.key ^ SPLIT_DOMAIN).wrapping_add(index.wrapping_mul(GOLDEN)),
        );
        Self { key, counter: 0 }
    }

    /// The stream identifier. Two streams with distinct ids produce
    /// independent sequences.
    pub fn stream_id(&self) -> u64 {
        self.key
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        const DEN: f64 = (1u64 << 53) as f64;
        ((self.next_u64() >> 11) as f64) / DEN
    }

    /// Uniform integer in [0, n). Rejection sampling keeps it exactly uniform.
    pub fn gen_range(&mut self, n: u64) -> u64 {
        assert!(n > 0, "gen_range requires n > 0");
        let threshold = n.wrapping_neg() % n;
        loop {
            let v = self.next_u64();
            if v >= threshold {
                return v % n;
            }
        }
    }

    /// Uniform in [lo, hi).
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.gen_range(i as u64 + 1) as usize;
            slice.swap(i, j);
        }
    }
}

/// Per-run seed derivation for ensembles: hash of (base seed, run index).
pub fn run_seed(base_seed: u64, run_index: u64) -> u64 {
    mix64(mix64(base_seed ^ SEED_DOMAIN).wrapping_add(run_index.wrapping_mul(GOLDEN)))
}
