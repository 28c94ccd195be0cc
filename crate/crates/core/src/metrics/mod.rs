//! Peak metrics over layer curves, per-model fingerprint profiles and smoothed
//! depth trajectories.

mod lowess;
mod peak;
mod profile;

use thiserror::Error;

pub use lowess::{lowess_fit_at, lowess_trajectory, minmax_normalize, LowessOptions, Trajectory};
pub use peak::{
    compute_metrics, layer_entropy, peak_position, peak_strength, peak_width, positional_delta, DeltaRecord,
    FingerprintMetrics, PEAK_WIDTH_FRACTION,
};
pub use profile::{
    aggregate_profile, group_delta, read_profiles, write_profiles, write_strengths, FingerprintProfile,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("entropy undefined: every score is <= 0")]
    UndefinedEntropy,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("profile format error: {0}")]
    Format(String),
}
