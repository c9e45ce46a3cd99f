use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hex SHA-256 of the compact JSON form of `value`. Object keys come out
/// sorted because `serde_json::Value` maps are ordered.
pub fn json_digest(value: &serde_json::Value) -> String {
    sha256_hex(&serde_json::to_vec(value).expect("json value serializes"))
}
