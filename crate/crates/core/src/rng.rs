//! Seeded randomness.
//!
//! All stochastic steps (initialisation, shuffling, noise, Monte Carlo draws)
//! use xoshiro256++ seeded through SplitMix64 from a single `u64`, so a run is
//! fully determined by its seed on every platform.

use rand_xoshiro::rand_core::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus as SeededRng;

pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}
