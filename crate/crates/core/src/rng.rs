//! Reproducible random streams.
//!
//! Every Monte Carlo consumer draws from a ChaCha8 generator keyed by
//! `(seed, stream)`. ChaCha is counter based, so distinct stream ids give
//! independent sequences and any replica can be regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Generator for replica `stream` of the experiment seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
