use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Stage;
use crate::error::PipelineError;

pub const LEDGER_FILE: &str = "run_ledger.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SkippedTarget {
    pub model_id: String,
    pub dataset_id: String,
    pub target: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    /// Digest over the stage settings and every input digest.
    pub input_digest: String,
    pub inputs: Vec<ArtifactDigest>,
    /// Paths relative to the output directory.
    pub outputs: Vec<ArtifactDigest>,
    pub wall_time_ms: u128,
    /// True when the outputs of an earlier run were kept.
    pub reused: bool,
    pub skipped: Vec<SkippedTarget>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLedger {
    pub seed: Option<u64>,
    pub bootstrap_resamples: Option<usize>,
    pub stages: Vec<StageRecord>,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

impl RunLedger {
    pub fn load(out_dir: &Path) -> Result<Option<Self>, PipelineError> {
        let path = out_dir.join(LEDGER_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path).map_err(|e| PipelineError::io(&path, e))?;
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), PipelineError> {
        let path = out_dir.join(LEDGER_FILE);
        let text = serde_json::to_string_pretty(self).expect("ledger serializes");
        fs::write(&path, text + "\n").map_err(|e| PipelineError::io(&path, e))
    }

    pub fn record(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }

    /// Replaces the record for its stage and drops outputs now claimed by it
    /// from any other record.
    pub fn upsert(&mut self, record: StageRecord) {
        self.stages.retain(|r| r.stage != record.stage);
        for other in &mut self.stages {
            other.outputs.retain(|o| !record.outputs.iter().any(|n| n.path == o.path));
        }
        self.stages.push(record);
        self.stages.sort_by_key(|r| r.stage);
    }

    /// Every output path must belong to exactly one stage.
    pub fn outputs_unique(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.stages.iter().flat_map(|r| &r.outputs).all(|o| seen.insert(o.path.clone()))
    }
}

impl StageRecord {
    /// Outputs still on disk with the recorded digests.
    pub fn outputs_intact(&self, out_dir: &Path) -> bool {
        self.outputs.iter().all(|o| {
            let p = out_dir.join(&o.path);
            p.exists() && sha256_file(&p).map(|d| d == o.sha256).unwrap_or(false)
        })
    }
}
