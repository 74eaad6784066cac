//! Seeded, splittable random streams.
//!
//! Every component draws from its own ChaCha stream derived from one master
//! seed, so adding draws in one component never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream identifiers for the components that consume randomness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Component {
    Tree = 1,
    Sampling = 2,
    Init = 3,
    Shuffle = 4,
    Rademacher = 5,
    PointCloud = 6,
    Bernstein = 7,
}

/// Build the generator for `component` under `seed`, with an extra `index`
/// for per-draw or per-restart substreams.
pub fn stream(seed: u64, component: Component, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((component as u64) << 48) ^ index);
    rng
}

/// Derive a child seed, used when a job needs a seed of its own (e.g. one
/// restart of a multi-start optimiser).
pub fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
