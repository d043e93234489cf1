//! Reproducible random streams.
//!
//! Every random object in the crate is drawn from a `ChaCha8Rng` (a
//! counter-based generator with a portable, platform-independent output
//! stream) seeded with a 64-bit seed. Independent streams are derived from a
//! master seed with a SplitMix64 finalizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::scalar::Real;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream tags for seeds derived from a master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Problem,
    Sketch,
    Resample(u32),
    Custom(u64),
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Problem => 0x5052_4f42,
            Stream::Sketch => 0x534b_4554,
            Stream::Resample(k) => 0x5245_5300_0000_0000 | u64::from(k),
            Stream::Custom(t) => t ^ 0x4355_5354_0000_0000,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of an independent stream derived from `master`.
pub fn derive_seed(master: u64, stream: Stream) -> u64 {
    splitmix64(splitmix64(master) ^ stream.tag())
}

pub(crate) fn gaussian<T: Real>(rng: &mut Rng) -> T {
    let z: f64 = StandardNormal.sample(rng);
    T::lit(z)
}

pub(crate) fn gaussian_vec<T: Real>(rng: &mut Rng, len: usize) -> Vec<T> {
    (0..len).map(|_| gaussian(rng)).collect()
}
