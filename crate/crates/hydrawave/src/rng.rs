//! Self-contained deterministic random number generation.
//!
//! All simulation randomness flows through [`Rng`] (xoshiro256++) seeded via
//! [`mix_seed`], so that every realization, scheduling window, and
//! randomization candidate draws from its own stream derived from the master
//! seed. Identical seeds reproduce identical results bit for bit on any
//! platform, independent of execution order.

use num_complex::Complex64;
use std::f64::consts::PI;

/// SplitMix64 step, used both as a seed expander and as a seed mixer.
#[inline]
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from `seed` and a sequence of stream tags.
///
/// Tags identify the consumer (realization index, window contents, candidate
/// index, ...) so that unrelated draws never share a stream.
pub fn mix_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut state = seed ^ 0x6a09e667f3bcc909;
    let mut out = splitmix64(&mut state);
    for &t in tags {
        state ^= t.wrapping_mul(0x9e3779b97f4a7c15);
        out ^= splitmix64(&mut state);
    }
    out
}

/// xoshiro256++ generator.
#[derive(Debug, Clone)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        let mut state = seed;
        let s = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        Self { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = (self.s[0].wrapping_add(self.s[3]))
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [0, 2π).
    pub fn angle(&mut self) -> f64 {
        2.0 * PI * self.next_f64()
    }

    /// Uniform integer in [0, n).
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Modulo bias is negligible for the small n used here.
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box-Muller.
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    /// Circularly-symmetric complex normal with E|z|^2 = 1.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re = self.standard_normal();
        let im = self.standard_normal();
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}
