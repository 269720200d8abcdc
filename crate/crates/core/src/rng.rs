//! Reproducible random streams.
//!
//! Every random draw in the crate comes from ChaCha8 (`rand_chacha`), keyed by
//! a root seed and a `(label, index)` pair: the 64-bit seed is the root seed
//! XOR the first eight bytes of SHA-256(label), and `index` selects the ChaCha
//! stream. Restart `i` of a `vqe` run therefore draws from
//! `stream(root, "optimize", i)` regardless of which thread executes it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Algorithm identifier written into output metadata.
pub const RNG_ALGORITHM: &str = "chacha8/seed=root^sha256(label)[0..8]/stream=index";

pub type Rng = ChaCha8Rng;

pub fn stream(root: u64, label: &str, index: u64) -> Rng {
    let digest = Sha256::digest(label.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    let mut rng = ChaCha8Rng::seed_from_u64(root ^ u64::from_le_bytes(head));
    rng.set_stream(index);
    rng
}

/// First 64-bit output of `stream(root, label, 0)`; used to key sub-experiments.
pub fn derive_seed(root: u64, label: &str) -> u64 {
    use rand::RngCore;
    stream(root, label, 0).next_u64()
}
