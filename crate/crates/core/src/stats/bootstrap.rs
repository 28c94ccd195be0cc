use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::rng::stream_rng;
use crate::types::FeatureGroup;

/// Percentile bootstrap interval for a difference of group means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCI {
    pub group: Option<FeatureGroup>,
    pub delta: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
}

/// Linear-interpolation quantile of already sorted data (type 7).
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn resample_mean<R: Rng>(rng: &mut R, xs: &[f64]) -> f64 {
    let n = xs.len();
    (0..n).map(|_| xs[rng.random_range(0..n)]).sum::<f64>() / n as f64
}

/// Each resample draws both groups with replacement at their own sizes from
/// its own random stream, so the result does not depend on thread count.
pub fn bootstrap_mean_diff_ci(
    a: &[f64],
    b: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<BootstrapCI, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::SampleSize("bootstrap needs non-empty groups".into()));
    }
    if resamples == 0 {
        return Err(StatsError::SampleSize("bootstrap needs at least 1 resample".into()));
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let mut diffs: Vec<f64> = (0..resamples as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r);
            resample_mean(&mut rng, a) - resample_mean(&mut rng, b)
        })
        .collect();
    diffs.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(BootstrapCI {
        group: None,
        delta: mean(a) - mean(b),
        ci_low: percentile(&diffs, tail),
        ci_high: percentile(&diffs, 1.0 - tail),
        resamples,
        level,
        seed,
    })
}
