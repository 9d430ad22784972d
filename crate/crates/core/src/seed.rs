//! Named random substreams derived from one global seed.
//!
//! Every stochastic operation draws from its own stream (`split`, `smote`,
//! `downsample`, `forest`, `permimp`, `perturb`, `cv`, ...). A stream is a
//! pure function of `(seed, name, index)`, so the order in which operations
//! run never changes what any one of them sees.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const SPLIT: &str = "split";
pub const SMOTE: &str = "smote";
pub const DOWNSAMPLE: &str = "downsample";
pub const FOREST: &str = "forest";
pub const PERMIMP: &str = "permimp";
pub const PERTURB: &str = "perturb";
pub const CV: &str = "cv";
pub const SYNTH: &str = "synth";

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// Seed of the `index`-th child of stream `name`.
pub fn derive(seed: u64, name: &str, index: u64) -> u64 {
    splitmix(splitmix(seed ^ fnv1a(name)).wrapping_add(splitmix(index)))
}

/// RNG for stream `name` under the global `seed`.
pub fn stream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, name, 0))
}

/// RNG for the `index`-th child of stream `name` (one per tree, fold, repeat).
pub fn child(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(seed, name, index + 1))
}
