//! Deterministic randomness.
//!
//! All randomized procedures in the crate draw from ChaCha8, whose bit stream
//! is fixed by specification and identical on every platform.  Independent
//! tasks derive their own seed as `derive_seed(master, label)` so that adding
//! or reordering tasks never perturbs another task's stream.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The RNG used everywhere in the crate.
pub type Rng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derive a sub-seed from a master seed and a task label.  The derivation is
/// the first eight bytes (little-endian) of SHA-256 over the seed bytes and
/// the label, so distinct labels give statistically independent streams.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn chacha_stream_is_pinned() {
        // Frozen prefix of the seed-0 stream; a change here means the RNG
        // dependency changed its keystream and every fixture is invalid.
        let mut rng = rng_from_seed(0);
        let got: Vec<u32> = (0..4).map(|_| rng.gen::<u32>()).collect();
        assert_eq!(got, vec![2811902828, 3045455719, 3134767159, 2001118559]);
    }

    #[test]
    fn derive_seed_depends_on_label_and_master() {
        let a = derive_seed(7, "subset");
        let b = derive_seed(7, "subsets");
        let c = derive_seed(8, "subset");
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, "subset"));
    }
}
