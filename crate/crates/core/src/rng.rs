//! Seeded random streams.
//!
//! Every experiment is driven by a master seed. Independent jobs and runs get
//! their own stream through [`derive_seed`], so results do not depend on the
//! order in which a scheduler happens to execute them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate. ChaCha8 output is specified
/// independently of platform, which keeps seeded runs bit-identical.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for job `index` under `master`:
/// `splitmix64(splitmix64(master) ^ splitmix64(index + 1))`.
///
/// This function is part of the reproducibility contract; changing it changes
/// every derived result.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(1)))
}

/// Derives a seed from a master seed and a short textual tag, for streams
/// that are keyed by purpose rather than by index (e.g. tie-breaking).
pub fn derive_seed_tagged(master: u64, tag: &str) -> u64 {
    // FNV-1a over the tag bytes.
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    derive_seed(master, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable() {
        // Frozen values: any change here breaks reproducibility of old runs.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(derive_seed(7, 0), derive_seed(7, 0));
        assert_ne!(derive_seed(7, 0), derive_seed(7, 1));
        assert_ne!(derive_seed(7, 0), derive_seed(8, 0));
        assert_ne!(derive_seed_tagged(1, "a"), derive_seed_tagged(1, "b"));
    }
}
