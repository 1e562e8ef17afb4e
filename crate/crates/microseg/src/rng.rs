//! Counter-based pseudo-random generator.
//!
//! All randomness in this crate (weight init, dataset shuffles, synthetic
//! data) flows through this generator so that a seed reproduces bit-identical
//! results on every platform. It is SplitMix64: the state advances by a fixed
//! odd constant and the output is a finalizing hash of the state, so the k-th
//! draw is a pure function of `(seed, k)` using integer arithmetic only.
//!
//! Streams are split by hashing a stream tag into the seed, which keeps the
//! draws of one consumer (say, the epoch-3 shuffle) independent of how many
//! draws another consumer made.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    /// Derive an independent stream for `(seed, tag)`.
    ///
    /// Used to give each consumer (init, shuffle, synth sample i, ...) its
    /// own sequence from one user-facing seed.
    pub fn stream(seed: u64, tag: u64) -> Self {
        Rng::new(mix(seed ^ mix(tag.wrapping_mul(GAMMA))))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// Uniform in `[0, 1)` with 53 bits of randomness.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` via 128-bit fixed-point scaling.
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            xs.swap(i, j);
        }
    }
}

/// Stateless hash of a coordinate tuple, for lattice noise.
///
/// Pure function of its arguments; does not disturb any stream.
#[inline]
pub fn hash3(seed: u64, x: i64, y: i64) -> u64 {
    mix(seed
        .wrapping_add((x as u64).wrapping_mul(0x8538_4F1F_75B7_3279))
        .wrapping_add((y as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)))
}
