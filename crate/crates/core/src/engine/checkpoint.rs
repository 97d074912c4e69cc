//! Versioned JSON checkpoints of the full engine state.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::EngineState;

pub const CHECKPOINT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("checkpoint {path}: malformed document: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("checkpoint {path}: schema_version is missing")]
    MissingVersion { path: PathBuf },
    #[error("checkpoint {path}: schema_version {found} is not supported (expected {expected})")]
    VersionMismatch { path: PathBuf, found: u64, expected: u32 },
}

#[derive(Serialize, Deserialize)]
struct CheckpointDoc {
    schema_version: u32,
    state: EngineState,
}

/// Writes `state` to `path` through a temporary file, so a crash mid-write
/// leaves the previous checkpoint intact.
pub fn save_checkpoint(path: &Path, state: &EngineState) -> Result<(), CheckpointError> {
    let doc = CheckpointDoc { schema_version: CHECKPOINT_SCHEMA_VERSION, state: state.clone() };
    let json = serde_json::to_string_pretty(&doc)
        .map_err(|e| CheckpointError::Parse { path: path.to_path_buf(), reason: e.to_string() })?;
    let tmp = path.with_extension("json.tmp");
    let io_err = |source| CheckpointError::Io { path: path.to_path_buf(), source };
    fs::write(&tmp, json).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

pub fn load_checkpoint(path: &Path) -> Result<EngineState, CheckpointError> {
    let text = fs::read_to_string(path).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
    parse_checkpoint(&text).map_err(|e| e.at(path))
}

/// Parses a checkpoint document. Error paths are left empty.
pub fn parse_checkpoint(text: &str) -> Result<EngineState, CheckpointError> {
    let parse = |e: serde_json::Error| CheckpointError::Parse { path: PathBuf::new(), reason: e.to_string() };
    let value: Value = serde_json::from_str(text).map_err(parse)?;
    let found = match value.get("schema_version") {
        None => return Err(CheckpointError::MissingVersion { path: PathBuf::new() }),
        Some(v) => v.as_u64().ok_or_else(|| CheckpointError::Parse {
            path: PathBuf::new(),
            reason: "schema_version is not an unsigned integer".into(),
        })?,
    };
    if found != u64::from(CHECKPOINT_SCHEMA_VERSION) {
        return Err(CheckpointError::VersionMismatch {
            path: PathBuf::new(),
            found,
            expected: CHECKPOINT_SCHEMA_VERSION,
        });
    }
    let doc: CheckpointDoc = serde_json::from_value(value).map_err(parse)?;
    Ok(doc.state)
}

impl CheckpointError {
    fn at(self, p: &Path) -> Self {
        let path = p.to_path_buf();
        match self {
            CheckpointError::Io { source, .. } => CheckpointError::Io { path, source },
            CheckpointError::Parse { reason, .. } => CheckpointError::Parse { path, reason },
            CheckpointError::MissingVersion { .. } => CheckpointError::MissingVersion { path },
            CheckpointError::VersionMismatch { found, expected, .. } => {
                CheckpointError::VersionMismatch { path, found, expected }
            }
        }
    }
}
