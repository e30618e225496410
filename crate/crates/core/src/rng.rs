//! Seeded random streams.
//!
//! Every stochastic step of a run (weight init, shuffling, data generation,
//! group splitting) draws from ChaCha8 seeded with the run seed. Independent
//! consumers get independent ChaCha streams selected by a [`Purpose`] tag, so
//! adding draws in one place never shifts the sequence seen by another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Init = 1,
    Shuffle = 2,
    Expand = 3,
    Data = 4,
    Split = 5,
    Permutation = 6,
}

/// Stream for `purpose` at `(task, stream)` under `seed`.
pub fn derive(seed: u64, purpose: Purpose, task: usize, stream: usize) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = ((purpose as u64) << 48) | ((task as u64 & 0xffff_ffff) << 8) | (stream as u64 & 0xff);
    rng.set_stream(id);
    rng
}

pub fn from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
