//! Seeded random streams.
//!
//! Every stochastic quantity in an experiment is drawn from a ChaCha8 stream
//! whose seed is derived from a tuple of integers (master seed, repetition,
//! role, cell coordinates, member index, ...). Derivation folds the tuple
//! through the SplitMix64 finalizer, so a stream depends only on its
//! coordinates and never on the order in which streams are created. This is
//! what makes sweeps and parallel member updates reproducible.
//!
//! Gaussian variates come from `rand_distr::StandardNormal` (ziggurat) on top
//! of the ChaCha8 word stream; both are pure integer/float code with no
//! platform-dependent paths.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// The random stream type used throughout the crate.
pub type Stream = ChaCha8Rng;

/// Which part of a twin experiment a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Role {
    Truth = 1,
    ObsNoise = 2,
    Filter = 3,
    Shocks = 4,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold `parts` into `master`. Distinct tuples give (with overwhelming
/// probability) distinct seeds; the result is independent of call order.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(GOLDEN))))
}

/// A stream seeded from `derive_seed(master, parts)`.
pub fn stream(master: u64, parts: &[u64]) -> Stream {
    Stream::seed_from_u64(derive_seed(master, parts))
}

/// Stream for one role of one repetition.
pub fn role_stream(master: u64, repetition: u64, role: Role) -> Stream {
    stream(master, &[repetition, role as u64])
}

/// Per-member substream of a parent draw, used so members can be advanced
/// independently (and concurrently) with identical results.
pub fn member_stream(base: u64, member: usize) -> Stream {
    stream(base, &[member as u64])
}

/// Fill `out` with i.i.d. N(0, 1) draws.
pub fn fill_standard_normal<R: rand::Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    for v in out.iter_mut() {
        *v = StandardNormal.sample(rng);
    }
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
