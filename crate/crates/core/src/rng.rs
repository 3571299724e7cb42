//! Counter-style seeding: every random stream is derived from a base seed
//! plus a key, so adding or reordering work items never reshuffles others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Deterministic generator for `(seed, parts...)`.
pub fn keyed_rng(seed: u64, parts: &[&[u8]]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    ChaCha8Rng::from_seed(h.finalize().into())
}
