//! Seed derivation for reproducible parallel sampling.
//!
//! Randomized work in this crate fans out over independent units (bootstrap
//! resamples, simulation replicates, sweep cells). Each unit builds its own
//! generator from the run seed and its index, so results are bit-identical
//! no matter how the units are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Mixes a seed with a tag into a new 64-bit seed (splitmix64 finalizer).
///
/// Used to give nested stages (scenario -> replicate -> bootstrap) seeds that
/// do not collide with each other or with the parent stream.
#[must_use]
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for substream `stream` of `seed`.
///
/// Substreams of one seed are statistically independent ChaCha streams, and
/// the same `(seed, stream)` pair always yields the same sequence.
#[must_use]
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
