//! Seeded random streams.
//!
//! Every random draw comes from ChaCha8 (`rand_chacha::ChaCha8Rng`) keyed by
//! the master seed via `seed_from_u64`, with the 64-bit stream id set to
//! `(purpose << 48) | index`. Each purpose/index pair therefore gets an
//! independent stream, so results do not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    SyntheticShared = 1,
    SyntheticClass = 2,
    ClassChoice = 3,
    Split = 4,
    Subsample = 5,
}

pub fn stream(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | (index & ((1 << 48) - 1)));
    rng
}
