//! Seeded random streams, one per party.
//!
//! Alice, Bob, Eve and the channel each draw from their own ChaCha stream
//! derived from a single master seed, so any party can be replayed alone and
//! a run is reproducible bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
pub struct PartyStreams {
    pub alice: ChaCha8Rng,
    pub bob: ChaCha8Rng,
    pub eve: ChaCha8Rng,
    pub channel: ChaCha8Rng,
}

impl PartyStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            alice: stream(seed, 1),
            bob: stream(seed, 2),
            eve: stream(seed, 3),
            channel: stream(seed, 4),
        }
    }
}

/// Independent ChaCha stream `id` under `seed`.
pub fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
