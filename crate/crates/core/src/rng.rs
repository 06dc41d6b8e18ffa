//! Per-sample random streams.
//!
//! Every Monte Carlo sample draws from its own ChaCha8 stream, keyed by the
//! experiment's base seed and selected by the sample index. ChaCha is a
//! counter-based generator, so the derivation is platform independent and a
//! sample's stream does not depend on how samples are scheduled over workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SampleRng = ChaCha8Rng;

/// Random stream for sample `index` of an experiment seeded with `base_seed`.
pub fn seed_stream(base_seed: u64, index: u64) -> SampleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}
