//! Seed derivation for reproducible parallel sampling.
//!
//! Every random stream is identified by a master seed plus a path of
//! counters (stream tag, circuit index, trial index, ...). Streams are
//! derived by hashing, never by advancing a shared generator, so results do
//! not depend on execution order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

pub mod stream {
    pub const MESH_NOISE: u64 = 0x6d65_7368;
    pub const SHOTS: u64 = 0x7368_6f74;
    pub const FINAL_PHASES: u64 = 0x7068_6173;
    pub const TRIALS: u64 = 0x7472_6961;
    pub const RESTARTS: u64 = 0x7273_7472;
    pub const UNITARIES: u64 = 0x6861_6172;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hashes `master` and `path` into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub fn rng_from_seed(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn derive_rng(master: u64, path: &[u64]) -> Rng {
    rng_from_seed(derive_seed(master, path))
}
