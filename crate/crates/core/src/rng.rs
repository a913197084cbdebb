//! Seeded, platform-independent random numbers.
//!
//! Every stochastic step in the workspace draws from [`SeededRng`], which is
//! xoshiro256++ seeded through SplitMix64 (`seed_from_u64`). Both algorithms
//! are fully specified integer recurrences, so a seed reproduces the same
//! stream on every platform and build.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SeededRng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> SeededRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}
