use std::path::{Path, PathBuf};

use layerprint_core::repr::{manifest_path, ModelManifest};
use serde::Deserialize;

use crate::error::PipelineError;

/// One (model, dataset) bundle: a stack, its sidecar manifest and a label table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    pub stack: PathBuf,
    pub manifest: PathBuf,
    pub labels: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    stack: PathBuf,
    labels: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    #[serde(default)]
    bundle: Vec<Entry>,
}

/// Reads a TOML registry of `[[bundle]]` tables; paths are relative to the file.
pub fn load_registry(path: &Path) -> Result<Vec<Bundle>, PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    let file: RegistryFile =
        toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
    Ok(file
        .bundle
        .into_iter()
        .map(|e| {
            let stack = resolve(e.stack);
            Bundle { manifest: manifest_path(&stack), stack, labels: resolve(e.labels) }
        })
        .collect())
}

impl Bundle {
    pub fn load_manifest(&self) -> Result<ModelManifest, PipelineError> {
        ModelManifest::load(&self.manifest)
            .map_err(|e| PipelineError::module(self.manifest.display().to_string(), e))
    }
}
