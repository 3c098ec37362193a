//! Seeded random streams.
//!
//! Every stochastic stage draws from ChaCha8 seeded with the run seed, on a
//! stream selected by hashing the stage name. Adding a stage therefore never
//! shifts the numbers an existing stage sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// RNG for `stage`, sub-stream `index` (e.g. a restart number).
pub fn stage_rng(seed: u64, stage: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(stage.as_bytes()).wrapping_add(index));
    rng
}
