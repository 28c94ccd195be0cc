use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ReprError;
use crate::Architecture;

/// Human-edited sidecar describing the model behind a stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub model_id: String,
    pub architecture: Architecture,
    pub param_count: u64,
    /// Encoder block count `L`.
    pub num_blocks: usize,
    pub dataset_id: String,
    pub frame_rate_hz: f64,
}

impl ModelManifest {
    pub(crate) fn check(&self) -> Result<(), ReprError> {
        if self.param_count == 0 {
            return Err(ReprError::Data("param_count must be positive".into()));
        }
        if self.num_blocks == 0 {
            return Err(ReprError::Data("num_blocks must be positive".into()));
        }
        if !(self.frame_rate_hz.is_finite() && self.frame_rate_hz > 0.0) {
            return Err(ReprError::Data(format!(
                "frame_rate_hz must be positive, got {}",
                self.frame_rate_hz
            )));
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ReprError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ReprError::io(path, e))?;
        let manifest: ModelManifest =
            serde_json::from_str(&text).map_err(|e| ReprError::Format(format!("{}: {e}", path.display())))?;
        manifest.check()?;
        Ok(manifest)
    }
}

/// `<dir>/<stem>.manifest.json` for a stack at `<dir>/<stem>.<ext>`.
pub fn manifest_path(stack_path: &Path) -> PathBuf {
    let stem = stack_path.file_stem().unwrap_or_default().to_string_lossy();
    stack_path.with_file_name(format!("{stem}.manifest.json"))
}
