//! Seed streams.
//!
//! Every stochastic step draws from a ChaCha20 generator keyed by the run seed
//! and a fixed stream id, so tuning and evaluation never share random numbers.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type RunRng = ChaCha20Rng;

pub const STREAM_INIT: u64 = 1;
pub const STREAM_TRAIN: u64 = 2;
pub const STREAM_TUNE: u64 = 3;
pub const STREAM_EVAL: u64 = 4;
pub const STREAM_ORACLE: u64 = 5;
pub const STREAM_DATA: u64 = 6;
pub const STREAM_TASK: u64 = 7;

pub fn stream(seed: u64, stream: u64) -> RunRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
