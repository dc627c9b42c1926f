//! Stable seed derivation.
//!
//! Every random stream in the toolkit is keyed by `(master seed, role label,
//! index path)` so that results never depend on thread scheduling or on which
//! backend a unit was placed on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Derives a child seed from a master seed, a role label and an index path.
///
/// The derivation is SHA-256 based and therefore identical across platforms
/// and compiler versions.
pub fn derive_seed(master: u64, label: &str, path: &[u64]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update((label.len() as u64).to_le_bytes());
    hasher.update(label.as_bytes());
    for idx in path {
        hasher.update(idx.to_le_bytes());
    }
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, label: &str, path: &[u64]) -> ChaCha8Rng {
    rng_from_seed(derive_seed(master, label, path))
}
