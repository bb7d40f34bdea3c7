//! Provenance stamped into every CLI output: which command, the hash of the
//! fully merged configuration, the master seed and the artifact format.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub command: String,
    /// SHA-256 of the canonical `key=value` rendering of the merged config.
    pub config_hash: String,
    pub seed: u64,
    pub format_version: u32,
}

impl Provenance {
    pub fn new(command: &str, canonical_config: &str, seed: u64) -> Self {
        Provenance {
            tool: format!("triage {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            config_hash: crate::seed::sha256_hex(canonical_config.as_bytes()),
            seed,
            format_version: crate::train::FORMAT_VERSION,
        }
    }

    /// `key: value` lines for CSV comment headers.
    pub fn header_lines(&self) -> String {
        format!(
            "tool: {}\ncommand: {}\nconfig_hash: {}\nseed: {}\nformat_version: {}",
            self.tool, self.command, self.config_hash, self.seed, self.format_version
        )
    }
}
