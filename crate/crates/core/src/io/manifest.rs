//! Selection manifest documents.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampler::SelectionManifest;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// A manifest wrapped with the tool version and the digest of the input file
/// it was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestDocument {
    pub schema_version: u32,
    pub tool_version: String,
    /// Hex SHA-256 of the ingested trajectory file.
    pub input_digest: String,
    pub manifest: SelectionManifest,
}

impl ManifestDocument {
    pub fn new(manifest: SelectionManifest, input_digest: impl Into<String>) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            input_digest: input_digest.into(),
            manifest,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ManifestError::Parse(e.to_string()))?;
        match value.get("schema_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(MANIFEST_SCHEMA_VERSION) => {}
            Some(v) => return Err(ManifestError::SchemaVersionMismatch(format!("schema_version {v}"))),
            None => return Err(ManifestError::SchemaVersionMismatch("missing schema_version".into())),
        }
        serde_json::from_value(value).map_err(|e| ManifestError::SchemaVersionMismatch(e.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest is not valid JSON: {0}")]
    Parse(String),
    #[error("manifest does not match schema version {MANIFEST_SCHEMA_VERSION}: {0}")]
    SchemaVersionMismatch(String),
}

pub fn write_manifest(doc: &ManifestDocument, path: &Path) -> Result<(), ManifestError> {
    fs::write(path, doc.to_json()).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_manifest(path: &Path) -> Result<ManifestDocument, ManifestError> {
    let text = fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ManifestDocument::from_json(&text)
}
