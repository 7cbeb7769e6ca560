//! Seed splitting.
//!
//! A global seed expands into independent ChaCha8 streams. The 32-byte
//! stream key is `SHA-256(seed_le ‖ len(component)_le ‖ component ‖ index_le)`,
//! so adding a new component never perturbs an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

fn key(seed: u64, component: &str, index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((component.len() as u64).to_le_bytes());
    h.update(component.as_bytes());
    h.update(index.to_le_bytes());
    h.finalize().into()
}

/// Generator for stream `index` of `component` under the global `seed`.
pub fn stream(seed: u64, component: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(key(seed, component, index))
}

/// Derived 64-bit seed for a sub-component.
pub fn derive_seed(seed: u64, component: &str, index: u64) -> u64 {
    let k = key(seed, component, index);
    u64::from_le_bytes(k[..8].try_into().expect("8 bytes"))
}
