//! Run manifests embedded in every output file.
//!
//! A manifest records what produced a file: command, parameters, seed, tool
//! version and a digest of the data payload. Only deterministic fields go
//! into the file so reruns are byte-identical; wall time is reported on
//! stderr instead.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: &'static str,
    pub digest: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        parameters: serde_json::Value,
        seed: Option<u64>,
        payload: &[u8],
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            parameters,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            digest: digest_hex(payload),
        }
    }

    /// Trailing comment block appended to CSV payloads.
    pub fn csv_block(&self) -> String {
        format!(
            "# manifest: {}\n",
            serde_json::to_string(self).expect("manifest serialises")
        )
    }
}

/// FNV-1a 64-bit digest, hex encoded.
pub fn digest_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100_0000_01b3);
    }
    format!("{hash:016x}")
}

/// A CSV payload with its manifest comment block attached.
pub fn csv_with_manifest(
    command: &str,
    parameters: serde_json::Value,
    seed: Option<u64>,
    payload: &str,
) -> String {
    let manifest = RunManifest::new(command, parameters, seed, payload.as_bytes());
    format!("{payload}{}", manifest.csv_block())
}
