use sha2::{Digest, Sha256};

/// Stage seed: the first 8 bytes (big-endian) of `sha256("<master>:<name>")`.
///
/// Stable across platforms and releases, so a single stage can be re-run in
/// isolation with the same randomness as a full run.
pub fn derive_seed(master: u64, name: &str) -> u64 {
    let digest = Sha256::digest(format!("{master}:{name}").as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_be_bytes(bytes)
}
