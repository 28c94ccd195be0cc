use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Encoder family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    Transformer,
    Conformer,
}

impl Architecture {
    /// Binary indicator used by the regression and classifier (Conformer = 1).
    pub fn indicator(self) -> f64 {
        match self {
            Architecture::Transformer => 0.0,
            Architecture::Conformer => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Transformer => "Transformer",
            Architecture::Conformer => "Conformer",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Architecture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "transformer" | "trans." | "trans" => Ok(Architecture::Transformer),
            "conformer" | "conf." | "conf" => Ok(Architecture::Conformer),
            other => Err(format!("unknown architecture `{other}`")),
        }
    }
}

/// The five feature groups that make up a fingerprint profile, in profile order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureGroup {
    Acoustic,
    Gender,
    Accent,
    Phoneme,
    Duration,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 5] = [
        FeatureGroup::Acoustic,
        FeatureGroup::Gender,
        FeatureGroup::Accent,
        FeatureGroup::Phoneme,
        FeatureGroup::Duration,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureGroup::Acoustic => "acoustic",
            FeatureGroup::Gender => "gender",
            FeatureGroup::Accent => "accent",
            FeatureGroup::Phoneme => "phoneme",
            FeatureGroup::Duration => "duration",
        }
    }
}

impl fmt::Display for FeatureGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FeatureGroup::ALL
            .into_iter()
            .find(|g| g.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown feature group `{s}`"))
    }
}
