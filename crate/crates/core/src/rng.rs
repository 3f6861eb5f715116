//! Seeded random streams.
//!
//! All randomness goes through ChaCha8. A `u64` seed is expanded into the
//! 256-bit key with `SeedableRng::seed_from_u64` (a fixed PCG32 expansion in
//! `rand_core`), so a given seed produces the same stream on every platform.
//! Independent streams for parallel work are derived from one seed by
//! selecting a different ChaCha stream id, never by sharing a generator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream `stream` of the generator family keyed by `seed`.
pub fn split(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
