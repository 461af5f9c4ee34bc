use sha2::{Digest, Sha256};

/// SHA-256 of `bytes`, lower-case hex.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// First eight digest bytes of SHA-256, read big-endian. This is the short
/// hash stored in containers.
pub fn sha256_u64(bytes: &[u8]) -> u64 {
    let d = Sha256::digest(bytes);
    u64::from_be_bytes(d[..8].try_into().unwrap())
}

/// Short hash from a full hex digest.
pub fn short_from_hex(hex: &str) -> Option<u64> {
    hex.get(..16).and_then(|h| u64::from_str_radix(h, 16).ok())
}
