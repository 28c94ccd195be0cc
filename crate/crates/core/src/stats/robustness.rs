use serde::{Deserialize, Serialize};

use super::dist::two_tailed_p;
use super::ttest::{two_sample_t, TTestResult};
use super::StatsError;
use crate::metrics::FingerprintProfile;
use crate::types::{Architecture, FeatureGroup};

/// Positions for `group`, split into (Conformer, Transformer); missing values skipped.
pub fn architecture_values(profiles: &[FingerprintProfile], group: FeatureGroup) -> (Vec<f64>, Vec<f64>) {
    let pick =
        |arch| profiles.iter().filter(|p| p.architecture == arch).filter_map(|p| p.position(group)).collect();
    (pick(Architecture::Conformer), pick(Architecture::Transformer))
}

/// Conformer minus Transformer t-test on one group.
pub fn compare_architectures(
    profiles: &[FingerprintProfile],
    group: FeatureGroup,
) -> Result<TTestResult, StatsError> {
    let (conf, trans) = architecture_values(profiles, group);
    let mut r = two_sample_t(&conf, &trans)?;
    r.group = Some(group);
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedTResult {
    pub n: usize,
    pub mean_difference: f64,
    pub t: f64,
    pub df: f64,
    pub p: f64,
}

/// Paired t-test on `a[i] - b[i]`.
pub fn paired_t(a: &[f64], b: &[f64]) -> Result<PairedTResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::Pairing(format!("{} values paired with {}", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(StatsError::SampleSize("paired t-test needs at least 2 pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let t = if se > 0.0 {
        mean / se
    } else if mean == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(mean)
    };
    Ok(PairedTResult { n: diffs.len(), mean_difference: mean, t, df: n - 1.0, p: two_tailed_p(t, n - 1.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEntry {
    pub excluded: String,
    pub result: TTestResult,
    pub delta_shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityReport {
    pub group: FeatureGroup,
    pub baseline: TTestResult,
    pub entries: Vec<SensitivityEntry>,
    /// Model whose removal moves the difference the most.
    pub most_influential: Option<String>,
}

/// Re-runs the architecture comparison once per dropped model. Exclusions that
/// would leave a side with fewer than two models are omitted.
pub fn sensitivity_loo_models(
    profiles: &[FingerprintProfile],
    group: FeatureGroup,
) -> Result<SensitivityReport, StatsError> {
    let baseline = compare_architectures(profiles, group)?;
    let mut entries = Vec::new();
    for (i, dropped) in profiles.iter().enumerate() {
        if dropped.position(group).is_none() {
            continue;
        }
        let rest: Vec<FingerprintProfile> =
            profiles.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| p.clone()).collect();
        if let Ok(result) = compare_architectures(&rest, group) {
            entries.push(SensitivityEntry {
                excluded: dropped.model_id.clone(),
                delta_shift: result.delta - baseline.delta,
                result,
            });
        }
    }
    let most_influential = entries
        .iter()
        .max_by(|a, b| a.delta_shift.abs().total_cmp(&b.delta_shift.abs()))
        .map(|e| e.excluded.clone());
    Ok(SensitivityReport { group, baseline, entries, most_influential })
}

/// Two-sample t-test of models matching `inside` against the remaining models.
pub fn subgroup_compare<F>(
    profiles: &[FingerprintProfile],
    group: FeatureGroup,
    inside: F,
) -> Result<TTestResult, StatsError>
where
    F: Fn(&FingerprintProfile) -> bool,
{
    let mut a = Vec::new();
    let mut b = Vec::new();
    for p in profiles {
        if let Some(v) = p.position(group) {
            if inside(p) {
                a.push(v);
            } else {
                b.push(v);
            }
        }
    }
    let mut r = two_sample_t(&a, &b)?;
    r.group = Some(group);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn paired_identical_vectors() {
        let r = paired_t(&[0.1, 0.5, 0.9], &[0.1, 0.5, 0.9]).unwrap();
        assert_eq!((r.t, r.p), (0.0, 1.0));
    }

    #[test]
    fn paired_matches_one_sample_test() {
        let a = [0.5, 0.62, 0.41, 0.77, 0.58];
        let b = [0.45, 0.5, 0.44, 0.6, 0.52];
        let r = paired_t(&a, &b).unwrap();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let m = d.iter().sum::<f64>() / 5.0;
        let s = (d.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 4.0).sqrt();
        let t = m / (s / 5f64.sqrt());
        assert!((r.t - t).abs() < 1e-12);
        let dist = StudentsT::new(0.0, 1.0, 4.0).unwrap();
        assert!((r.p - 2.0 * dist.cdf(-t.abs())).abs() < 1e-10);
    }

    #[test]
    fn paired_length_mismatch() {
        assert!(matches!(paired_t(&[1.0, 2.0], &[1.0]), Err(StatsError::Pairing(_))));
    }

    fn profiles() -> Vec<FingerprintProfile> {
        let rows = [
            ("c1", Architecture::Conformer, 0.20),
            ("c2", Architecture::Conformer, 0.25),
            ("c3", Architecture::Conformer, 0.95),
            ("t1", Architecture::Transformer, 0.50),
            ("t2", Architecture::Transformer, 0.55),
            ("t3", Architecture::Transformer, 0.60),
        ];
        rows.iter().map(|(id, arch, v)| FingerprintProfile::from_positions(*id, *arch, 1, [*v; 5])).collect()
    }

    #[test]
    fn outlier_is_most_influential() {
        let r = sensitivity_loo_models(&profiles(), FeatureGroup::Gender).unwrap();
        assert_eq!(r.most_influential.as_deref(), Some("c3"));
        // dropping any conformer leaves 2, still testable
        assert_eq!(r.entries.len(), 6);
    }

    #[test]
    fn subgroup_split() {
        let r = subgroup_compare(&profiles(), FeatureGroup::Accent, |p| p.model_id.starts_with('t')).unwrap();
        assert_eq!((r.n_a, r.n_b), (3, 3));
        assert!((r.mean_a - 0.55).abs() < 1e-12);
    }
}
