//! Pinned pseudo-random primitives for reproducible tie-breaking and
//! instance generation.
//!
//! Seeds must mean the same thing on every platform and in every future
//! version of this crate, so the algorithms are fixed here rather than
//! borrowed from a RNG crate whose stream might change:
//!
//! * **splitmix64** expands a `u64` seed into generator state:
//!   `z = (x += 0x9E3779B97F4A7C15)`, `z = (z ^ z>>30) * 0xBF58476D1CE4E5B9`,
//!   `z = (z ^ z>>27) * 0x94D049BB133111EB`, output `z ^ z>>31`.
//! * **xoshiro256\*\*** is the output generator. State `s[0..4]`, output
//!   `rotl(s[1] * 5, 7) * 9`, update `t = s[1] << 17; s[2]^=s[0]; s[3]^=s[1];
//!   s[1]^=s[2]; s[0]^=s[3]; s[2]^=t; s[3] = rotl(s[3], 45)`.
//! * **bounded(n)** maps one output to `0..n` by the multiply-shift
//!   `(x * n) >> 64` in 128-bit arithmetic.
//! * **shuffle** is the backward Fisher-Yates loop: for `i = len-1 .. 1`,
//!   swap `i` with `bounded(i + 1)`.
//!
//! All operations are wrapping integer arithmetic; the unit tests pin the
//! exact streams so any drift is caught.

/// Expands a seed into well-mixed 64-bit words.
pub struct SplitMix64 {
    x: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { x: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.x = self.x.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.x;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// xoshiro256** generator seeded via splitmix64.
#[derive(Clone)]
pub struct Xoshiro256StarStar {
    s: [u64; 4],
}

impl Xoshiro256StarStar {
    pub fn seed_from_u64(seed: u64) -> Self {
        let mut mix = SplitMix64::new(seed);
        Xoshiro256StarStar {
            s: [
                mix.next_u64(),
                mix.next_u64(),
                mix.next_u64(),
                mix.next_u64(),
            ],
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.s;
        let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform-enough value in `0..n` via multiply-shift (bias < n / 2^64).
    pub fn bounded(&mut self, n: u64) -> u64 {
        assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Uniform float in `[0, 1)` from the top 53 bits.
    pub fn unit_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Backward Fisher-Yates shuffle using [`Xoshiro256StarStar::bounded`].
pub fn shuffle<T>(items: &mut [T], rng: &mut Xoshiro256StarStar) {
    for i in (1..items.len()).rev() {
        let j = rng.bounded(i as u64 + 1) as usize;
        items.swap(i, j);
    }
}
