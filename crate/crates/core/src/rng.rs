//! Per-path random streams.
//!
//! Every path owns a ChaCha8 stream selected by `(seed, path index)`: the seed
//! keys the cipher and the path index picks the stream id. A path's draws
//! therefore never depend on how many threads ran or in which order paths
//! were generated, and chunked runs reproduce monolithic runs bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream id offset separating independent drivers of one experiment.
const DRIVER_STRIDE: u64 = 1 << 40;

pub type PathRng = ChaCha8Rng;

pub fn path_rng(seed: u64, path: u64) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    rng
}

/// Stream for driver number `driver` of a multi-driver run.
pub fn driver_rng(seed: u64, driver: usize, path: u64) -> PathRng {
    path_rng(seed, (driver as u64) * DRIVER_STRIDE + path)
}
