//! Seeded random streams. All randomness in the crate flows from one base
//! seed through named substreams so that pipeline stages never share or
//! reorder draws.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a child seed from `base` and a stream name (FNV-1a over the name,
/// folded into the base seed). Stable across platforms and versions.
pub fn derive_seed(base: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ base.rotate_left(17);
    for b in name.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    // Final avalanche (splitmix64 tail) so similar names diverge fully.
    let mut z = h.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A ChaCha8 generator for the named substream of `base`.
pub fn stream(base: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(base, name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn substreams_are_stable_and_distinct() {
        let a = derive_seed(7, "faces/s000/f000");
        let b = derive_seed(7, "faces/s000/f001");
        let c = derive_seed(8, "faces/s000/f000");
        assert_eq!(a, derive_seed(7, "faces/s000/f000"));
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stream_reproduces() {
        let x: f64 = stream(42, "init").random();
        let y: f64 = stream(42, "init").random();
        assert_eq!(x.to_bits(), y.to_bits());
    }
}
