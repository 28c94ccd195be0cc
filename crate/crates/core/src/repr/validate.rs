use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::labels::{LabelTable, NUM_ACOUSTIC, NUM_PHONEMES};
use super::manifest::ModelManifest;
use super::stack::TensorStack;
use super::targets::{builtin_targets, TargetColumn};

/// Findings for one (stack, manifest, labels) bundle.
///
/// `violations` make the bundle unusable; `warnings` (absent columns, frame-rate
/// notes) do not.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_usable(&self) -> bool {
        self.violations.is_empty()
    }
}

// caps repeated per-row findings so huge tables stay readable
const MAX_PER_KIND: usize = 5;

#[derive(Default)]
struct Collector {
    report: ValidationReport,
    counts: BTreeMap<&'static str, usize>,
}

impl Collector {
    fn violation(&mut self, kind: &'static str, detail: String) {
        let n = self.counts.entry(kind).or_default();
        *n += 1;
        if *n <= MAX_PER_KIND {
            self.report.violations.push(format!("{kind}: {detail}"));
        }
    }

    fn finish(mut self) -> ValidationReport {
        for (kind, n) in self.counts {
            if n > MAX_PER_KIND {
                self.report.violations.push(format!("{kind}: {} further occurrences", n - MAX_PER_KIND));
            }
        }
        self.report
    }
}

fn constant_per_utterance<T: PartialEq + Clone>(
    labels: &LabelTable,
    get: impl Fn(&super::labels::LabelRow) -> Option<T>,
) -> Vec<String> {
    let mut first: HashMap<&str, Option<T>> = HashMap::new();
    let mut bad = Vec::new();
    for row in &labels.rows {
        let value = get(row);
        match first.get(row.utterance_id.as_str()) {
            None => {
                first.insert(&row.utterance_id, value);
            }
            Some(prev) if *prev != value => {
                if !bad.contains(&row.utterance_id) {
                    bad.push(row.utterance_id.clone());
                }
            }
            Some(_) => {}
        }
    }
    bad
}

/// Checks every pairing and label invariant; never fails, all findings go into the report.
pub fn validate_bundle(
    stack: &TensorStack,
    manifest: &ModelManifest,
    labels: &LabelTable,
) -> ValidationReport {
    let mut c = Collector::default();

    if manifest.num_blocks + 1 != stack.num_layers_plus_1() {
        c.violation(
            "layer count mismatch",
            format!(
                "manifest num_blocks {} implies {} layers, stack has {}",
                manifest.num_blocks,
                manifest.num_blocks + 1,
                stack.num_layers_plus_1()
            ),
        );
    }
    if manifest.param_count == 0 {
        c.violation("manifest", "param_count must be positive".into());
    }
    if (manifest.frame_rate_hz - stack.frame_rate_hz()).abs() > 1e-9 {
        c.violation(
            "frame rate mismatch",
            format!("manifest {} Hz vs stack {} Hz", manifest.frame_rate_hz, stack.frame_rate_hz()),
        );
    }
    c.report
        .warnings
        .push(format!("frame rate {} Hz recorded, not harmonized across models", manifest.frame_rate_hz));

    if labels.is_empty() {
        c.violation("empty label table", "no rows".into());
    }

    let num_frames = stack.num_frames();
    let mut owner: HashMap<usize, &str> = HashMap::new();
    for row in &labels.rows {
        if row.frame_index >= num_frames {
            c.violation(
                "frame out of range",
                format!(
                    "utterance {} frame_index {} >= num_frames {num_frames}",
                    row.utterance_id, row.frame_index
                ),
            );
        }
        if let Some(prev) = owner.insert(row.frame_index, &row.utterance_id) {
            c.violation(
                "duplicate frame",
                format!("frame_index {} labelled by {prev} and {}", row.frame_index, row.utterance_id),
            );
        }
        if let Some(p) = row.phoneme {
            if usize::from(p) >= NUM_PHONEMES {
                c.violation(
                    "phoneme out of range",
                    format!("class {p} at frame {} (expected 0..{NUM_PHONEMES})", row.frame_index),
                );
            }
        }
        if let Some(d) = row.duration_ms {
            if !(d.is_finite() && d >= 0.0) {
                c.violation("invalid duration", format!("{d} ms at frame {}", row.frame_index));
            }
        }
        for k in 0..NUM_ACOUSTIC {
            if let Some(v) = row.acoustic[k] {
                if !v.is_finite() {
                    c.violation(
                        "non-finite acoustic value",
                        format!("acoustic_{k:02} at frame {}", row.frame_index),
                    );
                }
            }
        }
    }

    for utt in constant_per_utterance(labels, |r| r.gender) {
        c.violation("utterance-level label not constant", format!("gender varies within utterance {utt}"));
    }
    for utt in constant_per_utterance(labels, |r| r.accent_l1) {
        c.violation("utterance-level label not constant", format!("accent_l1 varies within utterance {utt}"));
    }
    for utt in constant_per_utterance(labels, |r| r.speaker_id.clone()) {
        c.violation(
            "utterance-level label not constant",
            format!("speaker_id varies within utterance {utt}"),
        );
    }

    if !labels.is_empty() {
        let mut absent_acoustic = 0;
        for target in builtin_targets() {
            if labels.column_present(target.column) {
                continue;
            }
            match target.column {
                TargetColumn::Acoustic(_) => absent_acoustic += 1,
                _ => c.report.warnings.push(format!("target column `{}` entirely absent", target.name)),
            }
        }
        if absent_acoustic > 0 {
            c.report
                .warnings
                .push(format!("{absent_acoustic} of {NUM_ACOUSTIC} acoustic target columns entirely absent"));
        }
    }

    c.finish()
}
