use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::adam::{fit_adam, Objective, TrainConfig};
use super::split::{Bucket, RowSplit};
use super::{ProbeError, ProbeModel, ProbeModelKind};

/// How regression probes are fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    /// Ridge normal equations with a tiny penalty.
    #[default]
    ClosedForm,
    /// Minibatch Adam with early stopping.
    Iterative,
}

/// Per-feature z-scoring fitted on training rows.
#[derive(Debug, Clone)]
pub(crate) struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<'_, f64>, rows: &[usize]) -> Self {
        let d = x.ncols();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for &i in rows {
            for (j, v) in x.row(i).iter().enumerate() {
                mean[j] += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for &i in rows {
            for (j, v) in x.row(i).iter().enumerate() {
                var[j] += (v - mean[j]).powi(2);
            }
        }
        let scale = var
            .into_iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, scale }
    }

    pub fn transform(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = x.to_owned();
        for mut row in z.axis_iter_mut(Axis(0)) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.scale[j];
            }
        }
        z
    }
}

/// Coefficient of determination `1 - SS_res / SS_tot` around the mean of `y`.
pub fn r_squared(y: &[f64], predicted: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = y.iter().zip(predicted).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

struct LeastSquares<'a> {
    z: &'a Array2<f64>,
    y: &'a [f64],
}

impl LeastSquares<'_> {
    fn residual(&self, p: &[f64], i: usize) -> f64 {
        let d = self.z.ncols();
        let row = self.z.row(i);
        let pred: f64 = row.iter().zip(&p[..d]).map(|(a, b)| a * b).sum::<f64>() + p[d];
        pred - self.y[i]
    }
}

impl Objective for LeastSquares<'_> {
    fn num_params(&self) -> usize {
        self.z.ncols() + 1
    }

    fn loss(&self, p: &[f64], rows: &[usize]) -> f64 {
        rows.iter().map(|&i| 0.5 * self.residual(p, i).powi(2)).sum::<f64>() / rows.len() as f64
    }

    fn gradient(&self, p: &[f64], rows: &[usize], grad: &mut [f64]) {
        let d = self.z.ncols();
        grad.iter_mut().for_each(|g| *g = 0.0);
        for &i in rows {
            let r = self.residual(p, i);
            for (g, z) in grad[..d].iter_mut().zip(self.z.row(i)) {
                *g += r * z;
            }
            grad[d] += r;
        }
        let scale = 1.0 / rows.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
}

fn ridge_solve(z: &Array2<f64>, y: &[f64], rows: &[usize], ridge: f64) -> Vec<f64> {
    let d = z.ncols();
    let zt = z.select(Axis(0), rows);
    let yt = ndarray::Array1::from_iter(rows.iter().map(|&i| y[i]));
    let gram = zt.t().dot(&zt);
    let rhs = zt.t().dot(&yt);
    let mut a = DMatrix::from_fn(d, d, |i, j| gram[[i, j]]);
    for i in 0..d {
        a[(i, i)] += ridge;
    }
    let b = DVector::from_iterator(d, rhs.iter().copied());
    let w = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None => a.svd(true, true).solve(&b, 1e-12).unwrap_or_else(|_| DVector::zeros(d)),
    };
    // features and target are centred on the training rows, so the intercept is 0
    let mut params: Vec<f64> = w.iter().copied().collect();
    params.push(0.0);
    params
}

/// Fits a linear regression probe on the training rows and scores R² on the
/// test rows.
///
/// Features and target are z-scored with training statistics before fitting,
/// so the score is invariant to per-feature scaling. The returned model is
/// expressed in raw feature units.
pub fn train_linear_probe(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    split: &RowSplit,
    solver: Solver,
    config: &TrainConfig,
    seed: u64,
) -> Result<(ProbeModel, f64), ProbeError> {
    if x.nrows() != y.len() || split.len() != y.len() {
        return Err(ProbeError::Shape(format!(
            "{} feature rows, {} targets, {} split rows",
            x.nrows(),
            y.len(),
            split.len()
        )));
    }
    let train = split.indices(Bucket::Train);
    let val = split.indices(Bucket::Val);
    let test = split.indices(Bucket::Test);
    if train.is_empty() || test.is_empty() {
        return Err(ProbeError::Split(format!("{} train rows, {} test rows", train.len(), test.len())));
    }
    let (y_mean, y_scale) = mean_std(train.iter().map(|&i| y[i]));
    if y_scale.is_nan() || y_scale <= 0.0 {
        return Err(ProbeError::DegenerateTarget("target is constant on the training rows".into()));
    }
    let test_y: Vec<f64> = test.iter().map(|&i| y[i]).collect();
    if test_y.iter().all(|v| *v == test_y[0]) {
        return Err(ProbeError::DegenerateTarget("target is constant on the test rows".into()));
    }

    let standardizer = Standardizer::fit(x, &train);
    let z = standardizer.transform(x);
    let yz: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_scale).collect();

    let params = match solver {
        Solver::ClosedForm => ridge_solve(&z, &yz, &train, config.ridge),
        Solver::Iterative => fit_adam(&LeastSquares { z: &z, y: &yz }, &train, &val, config, seed),
    };

    let d = x.ncols();
    let predicted: Vec<f64> = test
        .iter()
        .map(|&i| {
            let pz: f64 = z.row(i).iter().zip(&params[..d]).map(|(a, b)| a * b).sum::<f64>() + params[d];
            y_mean + y_scale * pz
        })
        .collect();
    let r2 = r_squared(&test_y, &predicted);

    let mut weights = Array2::zeros((d, 1));
    let mut bias = y_mean + y_scale * params[d];
    for j in 0..d {
        let w = y_scale * params[j] / standardizer.scale[j];
        weights[[j, 0]] = w;
        bias -= w * standardizer.mean[j];
    }
    Ok((ProbeModel { weights, bias: vec![bias], kind: ProbeModelKind::Regression }, r2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn normal(rng: &mut impl Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    fn split_for(n: usize) -> RowSplit {
        let buckets = (0..n)
            .map(|i| match i % 10 {
                8 => Bucket::Val,
                9 => Bucket::Test,
                _ => Bucket::Train,
            })
            .collect();
        RowSplit { buckets, groups: (0..n).collect() }
    }

    #[test]
    fn realizable_target_scores_one() {
        let mut rng = stream_rng(1, 0);
        let n = 400;
        let x = Array2::from_shape_fn((n, 5), |_| normal(&mut rng));
        let y: Vec<f64> = (0..n).map(|i| 3.0 * x[[i, 0]] - 2.0 * x[[i, 3]] + 0.5 * x[[i, 4]] + 7.0).collect();
        let cfg = TrainConfig::default();
        let (_, r2) = train_linear_probe(x.view(), &y, &split_for(n), Solver::ClosedForm, &cfg, 0).unwrap();
        assert!((r2 - 1.0).abs() < 1e-6, "{r2}");
    }

    #[test]
    fn one_dimensional_line_recovers_weight_and_bias() {
        let n = 50;
        let x = Array2::from_shape_fn((n, 1), |(i, _)| i as f64 * 0.1 - 2.0);
        let y: Vec<f64> = (0..n).map(|i| 2.0 * x[[i, 0]] + 1.0).collect();
        let cfg = TrainConfig::default();
        let (model, _) =
            train_linear_probe(x.view(), &y, &split_for(n), Solver::ClosedForm, &cfg, 0).unwrap();
        assert!((model.weights[[0, 0]] - 2.0).abs() < 1e-6);
        assert!((model.bias[0] - 1.0).abs() < 1e-6);
        assert!((model.outputs(&[0.5])[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn constant_training_target_is_degenerate() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| (i * j) as f64);
        let y = vec![4.0; 20];
        let err =
            train_linear_probe(x.view(), &y, &split_for(20), Solver::ClosedForm, &TrainConfig::default(), 0)
                .unwrap_err();
        assert!(matches!(err, ProbeError::DegenerateTarget(_)));
    }

    #[test]
    fn r_squared_reference_values() {
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(r_squared(&[1.0, 2.0, 3.0], &[2.0, 2.0, 2.0]), 0.0);
        assert!(r_squared(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) < 0.0);
    }

    #[test]
    fn uniform_feature_scaling_leaves_r2_unchanged() {
        let mut rng = stream_rng(2, 0);
        let n = 300;
        let x = Array2::from_shape_fn((n, 4), |_| normal(&mut rng));
        let y: Vec<f64> = (0..n).map(|i| x[[i, 1]] + normal(&mut rng)).collect();
        let cfg = TrainConfig::default();
        let split = split_for(n);
        let (_, base) = train_linear_probe(x.view(), &y, &split, Solver::ClosedForm, &cfg, 0).unwrap();
        for c in [1e-3, 0.5, 3.0, 1e4] {
            let scaled = x.mapv(|v| v * c);
            let (_, r2) = train_linear_probe(scaled.view(), &y, &split, Solver::ClosedForm, &cfg, 0).unwrap();
            assert!((r2 - base).abs() <= 1e-6, "c={c}: {r2} vs {base}");
        }
    }

    #[test]
    fn iterative_solver_matches_closed_form() {
        let mut rng = stream_rng(3, 0);
        let n = 3000;
        let x = Array2::from_shape_fn((n, 6), |_| normal(&mut rng));
        let w: Vec<f64> = (0..6).map(|_| rng.random_range(-0.5..0.5)).collect();
        let y: Vec<f64> =
            (0..n).map(|i| (0..6).map(|j| w[j] * x[[i, j]]).sum::<f64>() + 0.5 * normal(&mut rng)).collect();
        let cfg = TrainConfig::default();
        let split = split_for(n);
        let (_, a) = train_linear_probe(x.view(), &y, &split, Solver::ClosedForm, &cfg, 5).unwrap();
        let (_, b) = train_linear_probe(x.view(), &y, &split, Solver::Iterative, &cfg, 5).unwrap();
        assert!((a - b).abs() <= 1e-4, "closed {a} iterative {b}");
    }
}
