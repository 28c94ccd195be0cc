use serde::{Deserialize, Serialize};

use super::dist::two_tailed_p;
use super::StatsError;
use crate::types::FeatureGroup;

/// Familywise error rate for the Bonferroni flag.
pub const FAMILY_ALPHA: f64 = 0.05;

/// Pooled-variance two-sample t-test. `delta`, `t` and `cohens_d` are all
/// oriented as first group minus second group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub group: Option<FeatureGroup>,
    pub mean_a: f64,
    pub mean_b: f64,
    pub n_a: usize,
    pub n_b: usize,
    pub delta: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
    pub cohens_d: f64,
    pub bonferroni_significant: bool,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sum_sq_dev(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum()
}

pub fn two_sample_t(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::SampleSize(format!(
            "t-test needs at least 2 values per group, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let df = na + nb - 2.0;
    let pooled_var = (sum_sq_dev(a, ma) + sum_sq_dev(b, mb)) / df;
    let sp = pooled_var.sqrt();
    let delta = ma - mb;
    let (t, d) = if sp > 0.0 {
        (delta / (sp * (1.0 / na + 1.0 / nb).sqrt()), delta / sp)
    } else if delta == 0.0 {
        (0.0, 0.0)
    } else {
        (f64::INFINITY.copysign(delta), f64::INFINITY.copysign(delta))
    };
    Ok(TTestResult {
        group: None,
        mean_a: ma,
        mean_b: mb,
        n_a: a.len(),
        n_b: b.len(),
        delta,
        t,
        df,
        p: two_tailed_p(t, df),
        cohens_d: d,
        bonferroni_significant: false,
    })
}

/// Flags results with `p < FAMILY_ALPHA / family_size`, on the unrounded p.
pub fn bonferroni(results: &mut [TTestResult], family_size: usize) {
    let threshold = FAMILY_ALPHA / family_size.max(1) as f64;
    for r in results {
        r.bonferroni_significant = r.p < threshold;
    }
}
