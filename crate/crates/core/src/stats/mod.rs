//! Architecture comparison statistics over fingerprint profiles.

mod auc;
mod bootstrap;
mod classifier;
mod dist;
mod regression;
mod report;
mod robustness;
mod ttest;

use thiserror::Error;

pub use auc::roc_auc;
pub use bootstrap::{bootstrap_mean_diff_ci, percentile, BootstrapCI};
pub use classifier::{
    fit_classifier, loo_auc, ClassifierFit, ClassifierOptions, ClassifierReport, LooPrediction,
};
pub use dist::{ln_gamma, regularized_incomplete_beta, student_t_cdf, two_tailed_p};
pub use regression::{ols, ols_arch_size, OlsFit, RegressionFit};
pub use report::{group_means, GroupMean, LabelledPaired, LabelledTTest, StatReport};
pub use robustness::{
    architecture_values, compare_architectures, paired_t, sensitivity_loo_models, subgroup_compare,
    PairedTResult, SensitivityEntry, SensitivityReport,
};
pub use ttest::{bonferroni, two_sample_t, TTestResult, FAMILY_ALPHA};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("sample size: {0}")]
    SampleSize(String),
    #[error("pairing: {0}")]
    Pairing(String),
    #[error("singular design: {0}")]
    SingularDesign(String),
    #[error("incomplete profile: {0}")]
    IncompleteProfile(String),
}
