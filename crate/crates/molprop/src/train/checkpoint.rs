//! Versioned checkpoint serialization.
//!
//! A checkpoint is a single JSON document holding the run config, task
//! metadata, the target scaler, the CDF table for native features (plus a
//! digest of it), and every weight array row-major. JSON floats use the
//! shortest round-tripping representation, so save → load reproduces
//! predictions bit-exactly.

use super::{FeaturePlan, TrainConfig};
use crate::data::{TargetScaler, TaskType};
use crate::featurize::FeatureCdfTable;
use crate::model::DmpnnParams;
use crate::rng::hash_words;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint format version {got} (this build reads {expected})")]
    VersionMismatch { expected: u32, got: u32 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub task_type: TaskType,
    pub task_names: Vec<String>,
    pub train_config: TrainConfig,
    pub params: DmpnnParams,
    pub scaler: TargetScaler,
    pub cdf: Option<FeatureCdfTable>,
    pub cdf_digest: Option<String>,
}

impl Checkpoint {
    pub fn feature_plan(&self) -> FeaturePlan {
        self.train_config.features
    }
}

/// Content digest of a CDF table, for quick compatibility checks between
/// checkpoints without comparing whole tables.
pub fn cdf_digest(table: &FeatureCdfTable) -> String {
    let bytes = serde_json::to_vec(table).expect("cdf tables serialize");
    let words: Vec<u64> = bytes
        .chunks(8)
        .map(|c| {
            let mut buf = [0u8; 8];
            buf[..c.len()].copy_from_slice(c);
            u64::from_le_bytes(buf)
        })
        .collect();
    format!("{:016x}", hash_words(&words))
}

pub fn save_checkpoint(cp: &Checkpoint, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
    let json = serde_json::to_string(cp).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    let text = std::fs::read_to_string(path)?;
    // Peek at the version before the full parse so version mismatches beat
    // shape errors in the report.
    #[derive(Deserialize)]
    struct VersionOnly {
        format_version: u32,
    }
    let v: VersionOnly =
        serde_json::from_str(&text).map_err(|e| CheckpointError::Corrupt(e.to_string()))?;
    if v.format_version != CHECKPOINT_VERSION {
        return Err(CheckpointError::VersionMismatch {
            expected: CHECKPOINT_VERSION,
            got: v.format_version,
        });
    }
    serde_json::from_str(&text).map_err(|e| CheckpointError::Corrupt(e.to_string()))
}
