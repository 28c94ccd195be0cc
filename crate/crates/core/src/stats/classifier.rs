use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::auc::roc_auc;
use super::StatsError;
use crate::metrics::FingerprintProfile;
use crate::types::{Architecture, FeatureGroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOptions {
    /// Inverse L2 strength; the loss is `0.5‖w‖² + C·Σ logloss`.
    pub inverse_regularization: f64,
    /// Predict Conformer when the probability exceeds this.
    pub threshold: f64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self { inverse_regularization: 1.0, threshold: 0.5 }
    }
}

/// L2 logistic regression on z-scored positions; the positive class is Conformer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierFit {
    pub coefficients: [f64; 5],
    pub intercept: f64,
    pub feature_mean: [f64; 5],
    pub feature_scale: [f64; 5],
}

impl ClassifierFit {
    pub fn decision(&self, positions: &[f64; 5]) -> f64 {
        self.intercept
            + (0..5)
                .map(|j| self.coefficients[j] * (positions[j] - self.feature_mean[j]) / self.feature_scale[j])
                .sum::<f64>()
    }

    pub fn probability(&self, positions: &[f64; 5]) -> f64 {
        sigmoid(self.decision(positions))
    }

    /// Groups ordered by coefficient magnitude, largest first.
    pub fn ranking(&self) -> Vec<FeatureGroup> {
        let mut groups = FeatureGroup::ALL.to_vec();
        groups.sort_by(|a, b| {
            self.coefficients[b.index()].abs().total_cmp(&self.coefficients[a.index()].abs())
        });
        groups
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn log1p_exp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn complete_vectors(profiles: &[FingerprintProfile]) -> Result<Vec<[f64; 5]>, StatsError> {
    let missing: Vec<&str> =
        profiles.iter().filter(|p| !p.is_complete()).map(|p| p.model_id.as_str()).collect();
    if !missing.is_empty() {
        return Err(StatsError::IncompleteProfile(missing.join(", ")));
    }
    Ok(profiles.iter().map(|p| p.position_vector().unwrap()).collect())
}

fn fit_rows(xs: &[[f64; 5]], y: &[bool], c: f64) -> Result<ClassifierFit, StatsError> {
    let n = xs.len();
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos == 0 || n_pos == n {
        return Err(StatsError::SampleSize("classifier needs both architectures".into()));
    }
    let mut mean = [0.0; 5];
    let mut scale = [1.0; 5];
    for j in 0..5 {
        mean[j] = xs.iter().map(|x| x[j]).sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n as f64;
        if var > 0.0 {
            scale[j] = var.sqrt();
        }
    }
    let design =
        DMatrix::from_fn(n, 6, |i, j| if j == 0 { 1.0 } else { (xs[i][j - 1] - mean[j - 1]) / scale[j - 1] });
    let target = DVector::from_iterator(n, y.iter().map(|&v| if v { 1.0 } else { 0.0 }));
    let penalty = DMatrix::from_diagonal(&DVector::from_fn(6, |j, _| if j == 0 { 0.0 } else { 1.0 }));

    let objective = |w: &DVector<f64>| -> f64 {
        let z = &design * w;
        let data: f64 = z.iter().zip(target.iter()).map(|(&z, &t)| log1p_exp(z) - t * z).sum();
        0.5 * w.rows(1, 5).norm_squared() + c * data
    };

    let mut w = DVector::zeros(6);
    let mut current = objective(&w);
    for _ in 0..200 {
        let z = &design * &w;
        let p = z.map(sigmoid);
        let grad = design.transpose() * (&p - &target) * c + &penalty * &w;
        if grad.amax() < 1e-12 {
            break;
        }
        let weights = p.map(|v| v * (1.0 - v));
        let mut weighted = design.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= weights[i];
        }
        let hessian = design.transpose() * weighted * c + &penalty;
        let step = hessian
            .cholesky()
            .ok_or_else(|| StatsError::SingularDesign("classifier Hessian".into()))?
            .solve(&grad);
        let mut scale_step = 1.0;
        loop {
            let candidate = &w - &step * scale_step;
            let value = objective(&candidate);
            if value <= current || scale_step < 1e-10 {
                w = candidate;
                current = value;
                break;
            }
            scale_step *= 0.5;
        }
        if step.amax() * scale_step < 1e-14 {
            break;
        }
    }
    let mut coefficients = [0.0; 5];
    for j in 0..5 {
        coefficients[j] = w[j + 1];
    }
    Ok(ClassifierFit { coefficients, intercept: w[0], feature_mean: mean, feature_scale: scale })
}

fn labels(profiles: &[FingerprintProfile]) -> Vec<bool> {
    profiles.iter().map(|p| p.architecture == Architecture::Conformer).collect()
}

pub fn fit_classifier(
    profiles: &[FingerprintProfile],
    options: &ClassifierOptions,
) -> Result<ClassifierFit, StatsError> {
    let xs = complete_vectors(profiles)?;
    fit_rows(&xs, &labels(profiles), options.inverse_regularization)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LooPrediction {
    pub model_id: String,
    pub architecture: Architecture,
    pub probability: f64,
    pub predicted: Architecture,
}

impl LooPrediction {
    pub fn correct(&self) -> bool {
        self.architecture == self.predicted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub n: usize,
    pub full_fit: ClassifierFit,
    pub ranking: Vec<FeatureGroup>,
    pub loo_auc: f64,
    pub loo_correct: usize,
    pub loo_accuracy: f64,
    pub predictions: Vec<LooPrediction>,
}

/// Leave-one-model-out evaluation; the scaler is refit inside each fold.
pub fn loo_auc(
    profiles: &[FingerprintProfile],
    options: &ClassifierOptions,
) -> Result<ClassifierReport, StatsError> {
    let xs = complete_vectors(profiles)?;
    let y = labels(profiles);
    let n_pos = y.iter().filter(|&&v| v).count();
    if n_pos < 2 || y.len() - n_pos < 2 {
        return Err(StatsError::SampleSize("leave-one-out needs at least 2 models per architecture".into()));
    }
    let full_fit = fit_rows(&xs, &y, options.inverse_regularization)?;
    let mut predictions = Vec::with_capacity(xs.len());
    for held in 0..xs.len() {
        let train_x: Vec<[f64; 5]> =
            xs.iter().enumerate().filter(|(i, _)| *i != held).map(|(_, x)| *x).collect();
        let train_y: Vec<bool> = y.iter().enumerate().filter(|(i, _)| *i != held).map(|(_, v)| *v).collect();
        let fit = fit_rows(&train_x, &train_y, options.inverse_regularization)?;
        let probability = fit.probability(&xs[held]);
        predictions.push(LooPrediction {
            model_id: profiles[held].model_id.clone(),
            architecture: profiles[held].architecture,
            probability,
            predicted: if probability > options.threshold {
                Architecture::Conformer
            } else {
                Architecture::Transformer
            },
        });
    }
    let scores: Vec<f64> = predictions.iter().map(|p| p.probability).collect();
    let auc = roc_auc(&scores, &y)?;
    let correct = predictions.iter().filter(|p| p.correct()).count();
    Ok(ClassifierReport {
        n: xs.len(),
        ranking: full_fit.ranking(),
        full_fit,
        loo_auc: auc,
        loo_correct: correct,
        loo_accuracy: correct as f64 / xs.len() as f64,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(i: usize, arch: Architecture, pos: [f64; 5]) -> FingerprintProfile {
        FingerprintProfile::from_positions(format!("m{i}"), arch, 1_000_000, pos)
    }

    fn toy() -> Vec<FingerprintProfile> {
        let mut ps = Vec::new();
        for i in 0..6 {
            let s = i as f64 * 0.03;
            ps.push(profile(i, Architecture::Conformer, [0.5 + s, 0.2 + s, 0.3 - s, 0.4, 0.6 - s]));
            ps.push(profile(i + 6, Architecture::Transformer, [0.45 - s, 0.4 - s, 0.5 + s, 0.55, 0.5 + s]));
        }
        ps
    }

    /// Gradient of the penalized loss vanishes at the returned solution.
    #[test]
    fn converges_to_stationary_point() {
        let ps = toy();
        let fit = fit_classifier(&ps, &ClassifierOptions::default()).unwrap();
        let mut grad = [0.0; 6];
        for p in &ps {
            let x = p.position_vector().unwrap();
            let resid = fit.probability(&x) - p.architecture.indicator();
            grad[0] += resid;
            for j in 0..5 {
                grad[j + 1] += resid * (x[j] - fit.feature_mean[j]) / fit.feature_scale[j];
            }
        }
        assert!(grad[0].abs() < 1e-9);
        for j in 0..5 {
            assert!((grad[j + 1] + fit.coefficients[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn separable_data_is_classified() {
        let report = loo_auc(&toy(), &ClassifierOptions::default()).unwrap();
        assert_eq!(report.loo_auc, 1.0);
        assert_eq!(report.loo_correct, 12);
        assert!(report.full_fit.coefficients[FeatureGroup::Gender.index()] < 0.0);
    }

    #[test]
    fn stronger_regularization_shrinks_coefficients() {
        let ps = toy();
        let loose = fit_classifier(&ps, &ClassifierOptions::default()).unwrap();
        let tight =
            fit_classifier(&ps, &ClassifierOptions { inverse_regularization: 0.01, ..Default::default() })
                .unwrap();
        let norm = |f: &ClassifierFit| f.coefficients.iter().map(|c| c * c).sum::<f64>();
        assert!(norm(&tight) < norm(&loose));
    }

    #[test]
    fn incomplete_profile_rejected() {
        let mut ps = toy();
        ps[3].positions[2] = None;
        assert!(matches!(
            fit_classifier(&ps, &ClassifierOptions::default()),
            Err(StatsError::IncompleteProfile(id)) if id == "m7"
        ));
    }

    #[test]
    fn single_class_rejected() {
        let ps: Vec<_> = toy().into_iter().filter(|p| p.architecture == Architecture::Conformer).collect();
        assert!(fit_classifier(&ps, &ClassifierOptions::default()).is_err());
    }
}
