//! Portable random streams.
//!
//! Every random quantity in the crate comes from a [`Xoshiro256StarStar`]
//! generator whose 256-bit state is filled from a 64-bit seed with SplitMix64
//! (the `seed_from_u64` rule of `rand_xoshiro`). The derived draws below are
//! defined bit-for-bit so that another implementation can reproduce instances
//! and runs:
//!
//! * [`Draws::unit`]: `(next_u64 >> 11) * 2^-53`, uniform on `[0, 1)`.
//! * [`Draws::below`]: Lemire's multiply-shift with rejection, unbiased on
//!   `[0, bound)`.
//! * [`Draws::coin`]: `next_u64 >> 63 == 1`.
//!
//! Child streams are derived with [`child_seed`], which equals output number
//! `index + 1` of a SplitMix64 sequence started at the parent seed.

use rand_core::{RngCore, SeedableRng};
pub use rand_xoshiro::Xoshiro256StarStar;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output mixing function.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child stream `index` of `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    mix64(seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// The generator used for every stream in the crate.
pub fn stream(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

/// Derived draws with a fixed, documented mapping from raw 64-bit outputs.
pub trait Draws: RngCore {
    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below(0)");
        let range = bound as u64;
        let mut m = (self.next_u64() as u128) * (range as u128);
        if (m as u64) < range {
            let threshold = range.wrapping_neg() % range;
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (range as u128);
            }
        }
        (m >> 64) as usize
    }

    fn coin(&mut self) -> bool {
        self.next_u64() >> 63 == 1
    }

    /// Bernoulli trial that consumes exactly one draw.
    fn chance(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Fisher-Yates from the back, one `below` per position.
    fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

impl<R: RngCore + ?Sized> Draws for R {}
