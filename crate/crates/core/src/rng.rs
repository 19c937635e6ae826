//! Seeded random streams.
//!
//! Every random stage draws from its own ChaCha stream keyed by the user seed,
//! so the output of one stage never depends on how many numbers another stage
//! consumed or on the order in which parallel work was scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Identifies a consumer of randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    PairDraws = 1,
    IndividualDraws = 2,
    PeriodDraws = 3,
    Uniform = 4,
    GenGlobal = 5,
    GenIndividual = 6,
    Queries = 7,
}

/// Independent stream for `(seed, stage, index)`.
pub fn substream(seed: u64, stage: Stage, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((stage as u64) << 56) ^ index);
    rng
}
