//! Layer-wise linear probing of speech encoder hidden states and the
//! statistics used to compare "architectural fingerprints" across models.
//!
//! The crate is organised bottom-up:
//!
//! * [`repr`]: on-disk hidden-state stacks (`REPR1`), manifests, label tables.
//! * [`probe`]: splits, linear/logistic probes and per-layer score curves.
//! * [`metrics`]: peak position/strength/width, layer entropy, profiles and
//!   LOWESS trajectories.
//! * [`stats`]: t-tests, bootstrap intervals, size-controlled regression,
//!   the architecture classifier and robustness analyses.

pub mod metrics;
pub mod probe;
pub mod repr;
pub mod rng;
pub mod stats;
pub mod synthetic;
mod types;

pub use metrics::{
    aggregate_profile, layer_entropy, lowess_trajectory, peak_position, peak_strength, peak_width,
    positional_delta, FingerprintMetrics, FingerprintProfile, Trajectory,
};
pub use probe::{LayerCurve, ProbeModel, SplitAssignment, SplitPolicy};
pub use repr::{LabelTable, ModelManifest, ProbeTargetSpec, TensorStack};
pub use stats::{BootstrapCI, ClassifierReport, RegressionFit, StatReport, TTestResult};
pub use types::{Architecture, FeatureGroup};
