use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::dist::two_tailed_p;
use super::StatsError;
use crate::metrics::FingerprintProfile;
use crate::types::{Architecture, FeatureGroup};

/// Ordinary least squares with classical standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub t: Vec<f64>,
    pub p: Vec<f64>,
    pub residual_df: usize,
    pub r_squared: f64,
}

const CONDITION_LIMIT: f64 = 1e10;

pub fn ols(design: &DMatrix<f64>, y: &DVector<f64>) -> Result<OlsFit, StatsError> {
    let (n, k) = design.shape();
    if n != y.len() {
        return Err(StatsError::SampleSize(format!("{n} design rows for {} responses", y.len())));
    }
    if n <= k {
        return Err(StatsError::SampleSize(format!("{n} observations for {k} coefficients")));
    }
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if s_min.is_nan() || s_min <= 0.0 || s_max / s_min > CONDITION_LIMIT {
        return Err(StatsError::SingularDesign(format!("design condition number {:.3e}", s_max / s_min)));
    }
    let beta = svd.solve(y, 0.0).map_err(|e| StatsError::SingularDesign(e.to_string()))?;
    let resid = y - design * &beta;
    let df = n - k;
    let sigma2 = resid.norm_squared() / df as f64;
    // (XᵀX)⁻¹ = V S⁻² Vᵀ
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let inv_s2 = DMatrix::from_diagonal(&svd.singular_values.map(|s| 1.0 / (s * s)));
    let xtx_inv = v_t.transpose() * inv_s2 * v_t;
    let std_errors: Vec<f64> = (0..k).map(|j| (sigma2 * xtx_inv[(j, j)]).sqrt()).collect();
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let t: Vec<f64> = coefficients.iter().zip(&std_errors).map(|(b, s)| b / s).collect();
    let p = t.iter().map(|&t| two_tailed_p(t, df as f64)).collect();
    let y_mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    Ok(OlsFit {
        coefficients,
        std_errors,
        t,
        p,
        residual_df: df,
        r_squared: 1.0 - resid.norm_squared() / tss,
    })
}

/// Peak position regressed on an architecture indicator and log parameter count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub group: FeatureGroup,
    pub n: usize,
    pub intercept: f64,
    pub beta_arch: f64,
    pub beta_log_params: f64,
    pub se_arch: f64,
    pub se_log_params: f64,
    pub p_intercept: f64,
    pub p_arch: f64,
    pub p_log_params: f64,
    pub std_beta_arch: f64,
    pub std_beta_log_params: f64,
    pub residual_df: usize,
    pub r_squared: f64,
}

fn sample_sd(xs: &[f64]) -> f64 {
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Profiles without a position for `group` are left out.
pub fn ols_arch_size(
    profiles: &[FingerprintProfile],
    group: FeatureGroup,
) -> Result<RegressionFit, StatsError> {
    let used: Vec<&FingerprintProfile> = profiles.iter().filter(|p| p.position(group).is_some()).collect();
    for arch in [Architecture::Conformer, Architecture::Transformer] {
        if !used.iter().any(|p| p.architecture == arch) {
            return Err(StatsError::SampleSize(format!("no {arch} model has a {group} position")));
        }
    }
    if let Some(p) = used.iter().find(|p| p.param_count == 0) {
        return Err(StatsError::IncompleteProfile(format!("{} has a zero parameter count", p.model_id)));
    }
    let arch: Vec<f64> = used.iter().map(|p| p.architecture.indicator()).collect();
    let log_params: Vec<f64> = used.iter().map(|p| (p.param_count as f64).ln()).collect();
    let y: Vec<f64> = used.iter().map(|p| p.position(group).unwrap()).collect();
    let n = used.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => 1.0,
        1 => arch[i],
        _ => log_params[i],
    });
    let fit = ols(&design, &DVector::from_vec(y.clone()))?;
    let sd_y = sample_sd(&y);
    Ok(RegressionFit {
        group,
        n,
        intercept: fit.coefficients[0],
        beta_arch: fit.coefficients[1],
        beta_log_params: fit.coefficients[2],
        se_arch: fit.std_errors[1],
        se_log_params: fit.std_errors[2],
        p_intercept: fit.p[0],
        p_arch: fit.p[1],
        p_log_params: fit.p[2],
        std_beta_arch: fit.coefficients[1] * sample_sd(&arch) / sd_y,
        std_beta_log_params: fit.coefficients[2] * sample_sd(&log_params) / sd_y,
        residual_df: fit.residual_df,
        r_squared: fit.r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(id: &str, arch: Architecture, params: u64, pos: f64) -> FingerprintProfile {
        let mut positions = [None; 5];
        positions[FeatureGroup::Gender.index()] = Some(pos);
        FingerprintProfile {
            model_id: id.into(),
            architecture: arch,
            param_count: params,
            positions,
            strengths: [None; 5],
        }
    }

    #[test]
    fn recovers_exact_linear_model() {
        let mut ps = Vec::new();
        for (i, params) in [1e8f64, 3e8, 1e9, 2e9, 5e8, 7e7].iter().enumerate() {
            let arch = if i % 2 == 0 { Architecture::Conformer } else { Architecture::Transformer };
            let pos = 0.3 - 0.1 * arch.indicator() + 0.02 * params.ln();
            ps.push(profile(&format!("m{i}"), arch, *params as u64, pos));
        }
        let fit = ols_arch_size(&ps, FeatureGroup::Gender).unwrap();
        assert!((fit.beta_arch + 0.1).abs() < 1e-9);
        assert!((fit.beta_log_params - 0.02).abs() < 1e-9);
        assert!((fit.intercept - 0.3).abs() < 1e-9);
        assert_eq!(fit.residual_df, 3);
    }

    #[test]
    fn matches_normal_equations() {
        let x = DMatrix::from_row_slice(6, 2, &[1., 0.5, 1., 1.7, 1., 2.2, 1., 3.1, 1., 4.0, 1., 5.5]);
        let y = DVector::from_vec(vec![1.1, 2.0, 2.9, 3.7, 5.2, 6.1]);
        let fit = ols(&x, &y).unwrap();
        let xtx = x.transpose() * &x;
        let beta = xtx.clone().cholesky().unwrap().solve(&(x.transpose() * &y));
        assert!((fit.coefficients[0] - beta[0]).abs() < 1e-10);
        assert!((fit.coefficients[1] - beta[1]).abs() < 1e-10);
        let resid = &y - &x * &beta;
        let s2 = resid.norm_squared() / 4.0;
        let inv = xtx.try_inverse().unwrap();
        assert!((fit.std_errors[1] - (s2 * inv[(1, 1)]).sqrt()).abs() < 1e-10);
    }

    #[test]
    fn equal_param_counts_are_singular() {
        let ps: Vec<_> = (0..6)
            .map(|i| {
                let arch = if i < 3 { Architecture::Conformer } else { Architecture::Transformer };
                profile(&format!("m{i}"), arch, 1_000_000, 0.1 * i as f64)
            })
            .collect();
        assert!(matches!(ols_arch_size(&ps, FeatureGroup::Gender), Err(StatsError::SingularDesign(_))));
    }

    #[test]
    fn needs_both_architectures() {
        let ps: Vec<_> = (0..5)
            .map(|i| profile(&format!("m{i}"), Architecture::Transformer, 10u64.pow(7 + i), 0.5))
            .collect();
        assert!(matches!(ols_arch_size(&ps, FeatureGroup::Gender), Err(StatsError::SampleSize(_))));
    }
}
