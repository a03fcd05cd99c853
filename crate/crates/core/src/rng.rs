//! Counter-based random streams.
//!
//! Every random draw in the library comes from a [`StreamRng`] whose starting
//! state is a hash of `(root seed, domain, iteration, key)`. The key is a
//! user id or an item id, so the values a user or item sees never depend on
//! how work was scheduled across threads.
//!
//! Not cryptographically secure.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Separates the streams used by different consumers of the same seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    /// Weighted Gaussian and DP-SIPS share streams so a one-iteration SIPS
    /// run reproduces Weighted Gaussian exactly.
    GaussianTruncate = 1,
    GaussianNoise = 2,
    DpsuTruncate = 3,
    DpsuNoise = 4,
    GwTruncate = 5,
    GwNoise = 6,
    Synthetic = 7,
}

/// Identifies a family of streams; [`StreamKey::rng`] picks one member.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamKey {
    base: u64,
}

impl StreamKey {
    pub fn new(seed: u64, domain: Domain, iteration: u64) -> Self {
        let mut h = mix64(seed ^ GOLDEN_GAMMA);
        h = mix64(h ^ (domain as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
        h = mix64(h ^ iteration.wrapping_mul(0xA076_1D64_78BD_642F));
        StreamKey { base: h }
    }

    #[inline]
    pub fn rng(&self, key: u64) -> StreamRng {
        StreamRng {
            state: mix64(self.base ^ mix64(key.wrapping_add(GOLDEN_GAMMA))),
        }
    }
}

/// SplitMix64: output `i` is a bijective mix of `start + i·γ`.
#[derive(Clone, Debug)]
pub struct StreamRng {
    state: u64,
}

impl StreamRng {
    pub fn from_seed(seed: u64) -> Self {
        StreamRng { state: mix64(seed) }
    }

    /// Uniform on [0, 1) with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on (0, 1].
    #[inline]
    pub fn next_f64_open_zero(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` by Lemire's multiply-and-reject.
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let m = (self.next_u64() as u128) * (n as u128);
            if (m as u64) >= threshold {
                return (m >> 64) as u64;
            }
        }
    }
}

impl RngCore for StreamRng {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
