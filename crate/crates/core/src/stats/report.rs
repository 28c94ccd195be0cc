use serde::{Deserialize, Serialize};

use super::bootstrap::BootstrapCI;
use super::classifier::ClassifierReport;
use super::regression::RegressionFit;
use super::robustness::{architecture_values, PairedTResult, SensitivityReport};
use super::ttest::TTestResult;
use crate::metrics::FingerprintProfile;
use crate::types::{Architecture, FeatureGroup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMean {
    pub group: FeatureGroup,
    pub architecture: Architecture,
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
}

/// Per-architecture mean and standard error of peak position for each group.
pub fn group_means(profiles: &[FingerprintProfile]) -> Vec<GroupMean> {
    let mut out = Vec::new();
    for group in FeatureGroup::ALL {
        let (conf, trans) = architecture_values(profiles, group);
        for (architecture, values) in [(Architecture::Conformer, conf), (Architecture::Transformer, trans)] {
            if values.is_empty() {
                continue;
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std_error = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            };
            out.push(GroupMean { group, architecture, n: values.len(), mean, std_error });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledTTest {
    pub label: String,
    pub result: TTestResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledPaired {
    pub label: String,
    pub group: FeatureGroup,
    pub result: PairedTResult,
}

/// Everything the comparison stages produce, in one serializable record.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub group_means: Vec<GroupMean>,
    pub ttests: Vec<TTestResult>,
    pub bootstrap: Vec<BootstrapCI>,
    pub regressions: Vec<RegressionFit>,
    pub classifier: Option<ClassifierReport>,
    pub sensitivity: Vec<SensitivityReport>,
    pub exclusions: Vec<LabelledTTest>,
    pub subgroups: Vec<LabelledTTest>,
    pub paired: Vec<LabelledPaired>,
}

impl StatReport {
    pub fn is_empty(&self) -> bool {
        self.ttests.is_empty()
            && self.bootstrap.is_empty()
            && self.regressions.is_empty()
            && self.classifier.is_none()
            && self.sensitivity.is_empty()
            && self.exclusions.is_empty()
            && self.subgroups.is_empty()
            && self.paired.is_empty()
    }
}
