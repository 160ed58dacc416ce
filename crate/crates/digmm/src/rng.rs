//! Repository-wide pseudo-random generator convention.
//!
//! Every sampled fixture in this workspace is drawn from ChaCha8, seeded
//! explicitly. ChaCha8 is a counter-based stream cipher RNG: identical seeds
//! give identical streams on every platform and word size, which is what makes
//! corpora, checkpoints and test fixtures reproducible bit-for-bit.

pub use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

/// The generator used everywhere a seed is accepted.
pub type SeedRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SeedRng {
    SeedRng::seed_from_u64(seed)
}
