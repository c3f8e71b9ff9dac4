//! Seedable, splittable random streams.
//!
//! Every consumer of randomness gets its own ChaCha8 stream addressed by
//! `(seed, purpose, entity)`. Streams never share state, so changing how many
//! numbers one user draws cannot shift the numbers another user sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a stream is used for. The discriminant is part of the stream address.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Population = 1,
    Mobility = 2,
    Workload = 3,
}

/// Returns the stream for `(seed, purpose, entity)`.
pub fn stream(seed: u64, purpose: Purpose, entity: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 16 bits of purpose, 48 bits of entity id.
    rng.set_stream(((purpose as u64) << 48) | (entity & 0xFFFF_FFFF_FFFF));
    rng
}
