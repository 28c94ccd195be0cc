use serde::{Deserialize, Serialize};

use super::labels::{NUM_ACOUSTIC, NUM_PHONEMES};
use crate::FeatureGroup;

const ACOUSTIC_TRACKS: [&str; 6] = ["f0", "f1", "f2", "f3", "f3_f2", "intensity"];
const ACOUSTIC_STATS: [&str; 4] = ["min", "mean", "median", "max"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    Regression,
    Classification { num_classes: usize },
}

/// Granularity of the rows a probe is trained and scored on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    /// One row per labelled frame.
    Frame,
    /// One row per aligned phoneme segment (mean of its frames).
    Segment,
    /// One row per utterance (mean of its frames).
    Utterance,
}

/// Label-table column a target reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetColumn {
    Gender,
    Accent,
    Phoneme,
    Duration,
    Acoustic(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeTargetSpec {
    pub name: String,
    pub kind: ProbeKind,
    pub group: FeatureGroup,
    pub pooling: Pooling,
    pub column: TargetColumn,
}

impl ProbeTargetSpec {
    pub fn num_classes(&self) -> Option<usize> {
        match self.kind {
            ProbeKind::Classification { num_classes } => Some(num_classes),
            ProbeKind::Regression => None,
        }
    }
}

/// Name of acoustic target `k` (`f0_min`, `f0_mean`, ..., `intensity_max`).
pub fn acoustic_name(k: usize) -> String {
    format!("{}_{}", ACOUSTIC_TRACKS[k / ACOUSTIC_STATS.len()], ACOUSTIC_STATS[k % ACOUSTIC_STATS.len()])
}

/// The 28 built-in targets: 24 acoustic, gender, accent, phoneme, duration.
pub fn builtin_targets() -> Vec<ProbeTargetSpec> {
    let mut targets: Vec<ProbeTargetSpec> = (0..NUM_ACOUSTIC)
        .map(|k| ProbeTargetSpec {
            name: acoustic_name(k),
            kind: ProbeKind::Regression,
            group: FeatureGroup::Acoustic,
            pooling: Pooling::Utterance,
            column: TargetColumn::Acoustic(k),
        })
        .collect();
    targets.push(ProbeTargetSpec {
        name: "gender".into(),
        kind: ProbeKind::Classification { num_classes: 2 },
        group: FeatureGroup::Gender,
        pooling: Pooling::Frame,
        column: TargetColumn::Gender,
    });
    targets.push(ProbeTargetSpec {
        name: "accent".into(),
        kind: ProbeKind::Classification { num_classes: 6 },
        group: FeatureGroup::Accent,
        pooling: Pooling::Frame,
        column: TargetColumn::Accent,
    });
    targets.push(ProbeTargetSpec {
        name: "phoneme".into(),
        kind: ProbeKind::Classification { num_classes: NUM_PHONEMES },
        group: FeatureGroup::Phoneme,
        pooling: Pooling::Frame,
        column: TargetColumn::Phoneme,
    });
    targets.push(ProbeTargetSpec {
        name: "duration".into(),
        kind: ProbeKind::Regression,
        group: FeatureGroup::Duration,
        pooling: Pooling::Segment,
        column: TargetColumn::Duration,
    });
    targets
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_group_sizes() {
        let targets = builtin_targets();
        assert_eq!(targets.len(), 28);
        let count = |g| targets.iter().filter(|t| t.group == g).count();
        assert_eq!(count(FeatureGroup::Acoustic), 24);
        for g in &FeatureGroup::ALL[1..] {
            assert_eq!(count(*g), 1);
        }
        assert_eq!(targets[0].name, "f0_min");
        assert_eq!(targets[23].name, "intensity_max");
        assert_eq!(targets[26].num_classes(), Some(39));
    }
}
