//! Hidden-state stacks, model manifests and label tables.

mod labels;
mod manifest;
mod stack;
mod targets;
mod validate;

use std::path::PathBuf;

use thiserror::Error;

pub use labels::{Gender, L1Accent, LabelRow, LabelTable, NUM_ACOUSTIC, NUM_PHONEMES};
pub use manifest::{manifest_path, ModelManifest};
pub use stack::{normalized_depth, read_stack, write_stack, TensorStack, HEADER_LEN, MAGIC, VERSION};
pub use targets::{builtin_targets, Pooling, ProbeKind, ProbeTargetSpec, TargetColumn};
pub use validate::{validate_bundle, ValidationReport};

#[derive(Debug, Error)]
pub enum ReprError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ReprError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ReprError::Io { path: path.into(), source }
    }
}
