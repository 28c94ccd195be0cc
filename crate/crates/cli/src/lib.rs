//! Stage runner for layer-wise fingerprint analysis: validate, probe, metrics,
//! compare, classify and report over a registry of (model, dataset) bundles.

pub mod config;
pub mod error;
pub mod ledger;
pub mod registry;
pub mod report;
pub mod stages;

use std::fs;
use std::time::Instant;

pub use config::{RunConfig, Stage};
pub use error::PipelineError;
pub use ledger::RunLedger;

use ledger::{sha256_bytes, sha256_file, ArtifactDigest, StageRecord};
use stages::{count_validation_failures, execute, read_validation, stage_inputs, stage_settings};

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Recompute stages even when the ledger shows unchanged inputs.
    pub fresh: bool,
}

/// Runs the configured stages in order, reusing a stage's outputs when its
/// input digest and outputs match the previous ledger.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunLedger, PipelineError> {
    cfg.check()?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| PipelineError::io(out, e))?;
    let mut ledger = RunLedger::load(out)?.unwrap_or_default();
    ledger.seed = cfg.seed;
    ledger.bootstrap_resamples = cfg.bootstrap_resamples;

    for &stage in &cfg.stages {
        let inputs = stage_inputs(stage, cfg)?
            .into_iter()
            .map(|p| Ok(ArtifactDigest { sha256: sha256_file(&p)?, path: p.display().to_string() }))
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let mut material = format!("{stage}\n{}\n", stage_settings(stage, cfg));
        for i in &inputs {
            material.push_str(&i.sha256);
            material.push('\n');
        }
        let input_digest = sha256_bytes(material.as_bytes());

        let reusable = !opts.fresh
            && ledger.record(stage).is_some_and(|r| r.input_digest == input_digest && r.outputs_intact(out));
        if reusable {
            let mut record = ledger.record(stage).cloned().expect("checked above");
            record.reused = true;
            record.inputs = inputs;
            ledger.upsert(record);
            ledger.save(out)?;
            if stage == Stage::Validate {
                let failures =
                    count_validation_failures(&read_validation(&out.join(stages::VALIDATION_FILE))?);
                if failures > 0 {
                    return Err(PipelineError::Validation(failures));
                }
            }
            continue;
        }

        let started = Instant::now();
        let outcome = execute(stage, cfg)?;
        let outputs = outcome
            .outputs
            .iter()
            .map(|rel| {
                Ok(ArtifactDigest {
                    sha256: sha256_file(&out.join(rel))?,
                    path: rel.to_string_lossy().replace('\\', "/"),
                })
            })
            .collect::<Result<Vec<_>, PipelineError>>()?;
        let mut skipped = outcome.skipped;
        skipped.sort();
        ledger.upsert(StageRecord {
            stage,
            input_digest,
            inputs,
            outputs,
            wall_time_ms: started.elapsed().as_millis(),
            reused: false,
            skipped,
        });
        ledger.save(out)?;
        if outcome.validation_failures > 0 {
            return Err(PipelineError::Validation(outcome.validation_failures));
        }
    }
    Ok(ledger)
}
