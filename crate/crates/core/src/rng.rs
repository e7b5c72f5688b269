//! Seeded random streams.
//!
//! All randomness goes through ChaCha8 (`rand_chacha` 0.3), a counter-based
//! generator whose output is fixed across platforms. Distinct purposes draw
//! from distinct ChaCha stream ids of the same seed so they never overlap.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream ids used across the crate.
pub mod stream {
    pub const CHANNEL: u64 = 0;
    pub const GROUP_ASSIGNMENT: u64 = 1;
    pub const CSIT_ESTIMATE: u64 = 2;
    pub const CSIT_ERROR: u64 = 3;
    pub const AUX: u64 = 7;
}

pub fn seeded(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// One draw of `CN(0, variance)`.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// SplitMix64 finalizer, used to derive per-trial seeds from a base seed.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x6A09_E667_F3BC_C909);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
