use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{TrainConfig, TrainError};
use crate::domain::{AgeGroup, OutcomeScope};
use crate::net::Network;
use crate::pipeline::FeatureSchema;
use crate::provenance::Provenance;

/// Current artifact layout. Loading any other version fails.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub format_version: u32,
    pub schema: FeatureSchema,
    pub network: Network,
    pub config: TrainConfig,
    /// Final-epoch mean training loss per phase; `None` when the phase ran
    /// no epochs.
    pub phase1_loss: Option<f64>,
    pub phase2_loss: Option<f64>,
    pub age_group: AgeGroup,
    pub scope: OutcomeScope,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl ModelArtifact {
    /// Schema matches the record layout and the network's input width;
    /// network topology is sound.
    pub fn validate(&self) -> Result<(), TrainError> {
        self.schema.check_layout()?;
        self.network.validate()?;
        let (width, input) = (self.schema.width(), self.network.input_dim());
        if width != input {
            return Err(TrainError::SchemaWidth { schema: width, network: input });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, TrainError> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<ModelArtifact, TrainError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        match version {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => return Err(TrainError::UnsupportedVersion(v)),
            None => return Err(TrainError::Corrupt("missing format_version".into())),
        }
        let a: ModelArtifact = serde_json::from_value(value)?;
        a.validate()?;
        Ok(a)
    }
}

/// Writes `bytes` to `path` through a sibling temp file and a rename, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn save_artifact(a: &ModelArtifact, path: &Path) -> Result<(), TrainError> {
    write_atomic(path, a.to_json()?.as_bytes())?;
    Ok(())
}

pub fn load_artifact(path: &Path) -> Result<ModelArtifact, TrainError> {
    ModelArtifact::from_json(&std::fs::read_to_string(path)?)
}
