//! Deterministic RNG forking.
//!
//! Parallel work never shares a generator. Each task gets its own ChaCha
//! stream derived from a base seed and the task index, so results do not
//! depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type TaskRng = ChaCha8Rng;

/// Draws a base seed from a caller-owned generator.
pub fn base_seed<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    rng.random()
}

/// Independent stream `index` under `seed`.
pub fn fork(seed: u64, index: u64) -> TaskRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn seeded(seed: u64) -> TaskRng {
    ChaCha8Rng::seed_from_u64(seed)
}
