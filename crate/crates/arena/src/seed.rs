//! Per-match and per-agent seeds derived from one master seed.

use sha2::{Digest, Sha256};

/// First eight bytes of SHA-256 over the master seed and `parts`, all little-endian.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    for p in parts {
        h.update(p.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}
