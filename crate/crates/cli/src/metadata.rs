use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sparsefit::{CorrectionConfig, EpsPolicy};

/// Provenance block embedded in every JSON document the tool writes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub seed: Option<u64>,
    pub h: f64,
    pub eps: EpsPolicy,
    /// RFC 3339, or null when `--no-timestamp` is given.
    pub timestamp: Option<String>,
    /// SHA-256 of the input bytes, hex encoded.
    pub input_digest: String,
}

impl RunMetadata {
    pub fn new(config: &CorrectionConfig, seed: Option<u64>, input: &[u8], timestamp: bool) -> Self {
        Self {
            tool: env!("CARGO_BIN_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            seed,
            h: config.h(),
            eps: config.eps(),
            timestamp: timestamp.then(|| chrono::Utc::now().to_rfc3339()),
            input_digest: hex::encode(Sha256::digest(input)),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct Document<T> {
    pub metadata: RunMetadata,
    #[serde(flatten)]
    pub body: T,
}
