//! Stable hashes used for state ids, per-pass seeds and dataset fingerprints.
//!
//! Everything here goes through SHA-256 so values are identical across
//! platforms, processes and toolchain versions.

use sha2::{Digest, Sha256};

/// First eight bytes of the SHA-256 digest of `bytes`, big endian.
pub fn stable_u64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(head)
}

/// Seed for one search pass, derived from the theorem, the pass index and the
/// campaign-wide seed.
pub fn pass_seed(theorem_id: &str, pass_index: usize, global_seed: u64) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"pass-seed\0");
    hasher.update(theorem_id.as_bytes());
    hasher.update([0u8]);
    hasher.update((pass_index as u64).to_be_bytes());
    hasher.update(global_seed.to_be_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(head)
}

/// Mixes a search seed with an expansion counter so consecutive policy calls
/// inside one search draw from decorrelated streams.
pub fn expansion_seed(search_seed: u64, expansion: usize) -> u64 {
    let mut buf = [0u8; 16];
    buf[..8].copy_from_slice(&search_seed.to_be_bytes());
    buf[8..].copy_from_slice(&(expansion as u64).to_be_bytes());
    stable_u64(&buf)
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
