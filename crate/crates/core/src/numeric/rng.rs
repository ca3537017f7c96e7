//! Seeded random streams.
//!
//! Every stochastic component draws from [`Rng`], a ChaCha8 generator. A run
//! derives independent streams from one root seed with [`stream`]: the root
//! seed fixes the key and the stream id selects ChaCha's 64-bit stream word,
//! so streams never overlap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `id` under `root`.
pub fn stream(root: u64, id: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(id);
    rng
}

/// Named sub-stream ids used across the crate.
pub mod streams {
    pub const ENV: u64 = 1;
    pub const EXPLORER: u64 = 2;
    pub const AGENT: u64 = 3;
    pub const ORACLE: u64 = 4;
}
