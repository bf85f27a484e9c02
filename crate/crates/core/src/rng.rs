//! Seeded random streams.
//!
//! Every stochastic operation takes an explicit seed. Streams are derived
//! from a `(seed, stream)` pair so that, for example, step `k` of a training
//! run can be reproduced without replaying steps `0..k`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A rng for the sub-stream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Mixes a tag into a seed (splitmix64 finalizer) so distinct roles drawn
/// from one user seed never share a stream.
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn normal(r: &mut Rng) -> f64 {
    StandardNormal.sample(r)
}

pub fn uniform(r: &mut Rng) -> f64 {
    use rand::Rng as _;
    r.gen::<f64>()
}

pub fn uniform_range(r: &mut Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * uniform(r)
}

/// Uniform integer in `lo..=hi`.
pub fn int_range(r: &mut Rng, lo: usize, hi: usize) -> usize {
    use rand::Rng as _;
    r.gen_range(lo..=hi)
}

/// Seeded Fisher-Yates permutation of `0..n`.
pub fn permutation(r: &mut Rng, n: usize) -> alloc::vec::Vec<usize> {
    use rand::seq::SliceRandom;
    let mut v: alloc::vec::Vec<usize> = (0..n).collect();
    v.shuffle(r);
    v
}
