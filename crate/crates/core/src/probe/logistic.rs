use ndarray::{Array2, ArrayView2};

use super::adam::{fit_adam, Objective, TrainConfig};
use super::linear::Standardizer;
use super::split::{Bucket, RowSplit};
use super::{ProbeError, ProbeModel, ProbeModelKind};

/// Softmax cross-entropy over `K` classes; parameters are `K` weight rows of
/// length `d` followed by `K` biases.
struct CrossEntropy<'a> {
    z: &'a Array2<f64>,
    y: &'a [usize],
    classes: usize,
}

impl CrossEntropy<'_> {
    fn probabilities(&self, p: &[f64], i: usize, out: &mut [f64]) {
        let d = self.z.ncols();
        let row = self.z.row(i);
        let row = row.as_slice().expect("standard layout");
        let mut max = f64::NEG_INFINITY;
        for k in 0..self.classes {
            let w = &p[k * d..(k + 1) * d];
            let logit = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + p[self.classes * d + k];
            out[k] = logit;
            max = max.max(logit);
        }
        let mut sum = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            sum += *o;
        }
        out.iter_mut().for_each(|o| *o /= sum);
    }
}

impl Objective for CrossEntropy<'_> {
    fn num_params(&self) -> usize {
        (self.z.ncols() + 1) * self.classes
    }

    fn loss(&self, p: &[f64], rows: &[usize]) -> f64 {
        let mut prob = vec![0.0; self.classes];
        rows.iter()
            .map(|&i| {
                self.probabilities(p, i, &mut prob);
                -prob[self.y[i]].max(1e-300).ln()
            })
            .sum::<f64>()
            / rows.len() as f64
    }

    fn gradient(&self, p: &[f64], rows: &[usize], grad: &mut [f64]) {
        let d = self.z.ncols();
        let mut prob = vec![0.0; self.classes];
        grad.iter_mut().for_each(|g| *g = 0.0);
        for &i in rows {
            self.probabilities(p, i, &mut prob);
            prob[self.y[i]] -= 1.0;
            let row = self.z.row(i);
            let row = row.as_slice().expect("standard layout");
            for k in 0..self.classes {
                let e = prob[k];
                if e == 0.0 {
                    continue;
                }
                for (g, x) in grad[k * d..(k + 1) * d].iter_mut().zip(row) {
                    *g += e * x;
                }
                grad[self.classes * d + k] += e;
            }
        }
        let scale = 1.0 / rows.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
    }
}

/// Mean over groups of the within-group fraction of `true` entries.
///
/// Used to score frame-level predictions per utterance, so long utterances
/// do not dominate the accuracy.
pub fn utterance_macro_accuracy(correct: &[bool], groups: &[usize]) -> f64 {
    let mut per_group: std::collections::BTreeMap<usize, (usize, usize)> = Default::default();
    for (&c, &g) in correct.iter().zip(groups) {
        let e = per_group.entry(g).or_default();
        e.0 += usize::from(c);
        e.1 += 1;
    }
    let n = per_group.len() as f64;
    per_group.values().map(|(hit, total)| *hit as f64 / *total as f64).sum::<f64>() / n
}

/// Fits a multinomial logistic probe with the iterative regimen and returns
/// the per-utterance averaged test accuracy.
///
/// Classes that never occur in the training rows are excluded from prediction.
pub fn train_logistic_probe(
    x: ArrayView2<'_, f64>,
    y: &[usize],
    num_classes: usize,
    split: &RowSplit,
    config: &TrainConfig,
    seed: u64,
) -> Result<(ProbeModel, f64), ProbeError> {
    if x.nrows() != y.len() || split.len() != y.len() {
        return Err(ProbeError::Shape(format!(
            "{} feature rows, {} labels, {} split rows",
            x.nrows(),
            y.len(),
            split.len()
        )));
    }
    if let Some(c) = y.iter().find(|&&c| c >= num_classes) {
        return Err(ProbeError::Shape(format!("label {c} out of range for {num_classes} classes")));
    }
    let train = split.indices(Bucket::Train);
    let val = split.indices(Bucket::Val);
    let test = split.indices(Bucket::Test);
    if train.is_empty() || test.is_empty() {
        return Err(ProbeError::Split(format!("{} train rows, {} test rows", train.len(), test.len())));
    }
    let mut seen = vec![false; num_classes];
    for &i in &train {
        seen[y[i]] = true;
    }
    if seen.iter().filter(|s| **s).count() < 2 {
        return Err(ProbeError::DegenerateTarget("fewer than two classes in the training rows".into()));
    }

    let standardizer = Standardizer::fit(x, &train);
    let z = standardizer.transform(x);
    let objective = CrossEntropy { z: &z, y, classes: num_classes };
    let params = fit_adam(&objective, &train, &val, config, seed);

    let d = x.ncols();
    let mut prob = vec![0.0; num_classes];
    let correct: Vec<bool> = test
        .iter()
        .map(|&i| {
            objective.probabilities(&params, i, &mut prob);
            let predicted = (0..num_classes)
                .filter(|&k| seen[k])
                .fold(None::<usize>, |best, k| match best {
                    Some(b) if prob[b] >= prob[k] => Some(b),
                    _ => Some(k),
                })
                .unwrap();
            predicted == y[i]
        })
        .collect();
    let groups: Vec<usize> = test.iter().map(|&i| split.groups[i]).collect();
    let accuracy = utterance_macro_accuracy(&correct, &groups);

    let mut weights = Array2::zeros((d, num_classes));
    let mut bias = vec![0.0; num_classes];
    for k in 0..num_classes {
        let mut b = params[num_classes * d + k];
        for j in 0..d {
            let w = params[k * d + j] / standardizer.scale[j];
            weights[[j, k]] = w;
            b -= w * standardizer.mean[j];
        }
        // absent classes are never predicted by the raw model either
        bias[k] = if seen[k] { b } else { f64::NEG_INFINITY };
    }
    Ok((ProbeModel { weights, bias, kind: ProbeModelKind::Classification }, accuracy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn split(n: usize, frames_per_group: usize) -> RowSplit {
        let groups: Vec<usize> = (0..n).map(|i| i / frames_per_group).collect();
        let buckets = groups
            .iter()
            .map(|g| match g % 10 {
                8 => Bucket::Val,
                9 => Bucket::Test,
                _ => Bucket::Train,
            })
            .collect();
        RowSplit { buckets, groups }
    }

    #[test]
    fn separable_blobs_are_classified_perfectly() {
        let mut rng = stream_rng(4, 0);
        let n = 1000;
        let y: Vec<usize> = (0..n).map(|i| (i / 5) % 2).collect();
        let x = Array2::from_shape_fn((n, 3), |(i, j)| {
            let centre = if y[i] == 1 { 4.0 } else { -4.0 };
            let noise: f64 = rng.sample(StandardNormal);
            if j == 0 {
                centre + noise
            } else {
                noise
            }
        });
        let (_, acc) =
            train_logistic_probe(x.view(), &y, 2, &split(n, 5), &TrainConfig::default(), 1).unwrap();
        assert_eq!(acc, 1.0);
    }

    #[test]
    fn absent_classes_are_never_predicted() {
        let mut rng = stream_rng(5, 0);
        let n = 400;
        let y: Vec<usize> = (0..n).map(|i| if (i / 4) % 2 == 0 { 3 } else { 17 }).collect();
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let noise: f64 = rng.sample(StandardNormal);
            if j == 0 && y[i] == 17 {
                noise + 1.0
            } else {
                noise
            }
        });
        let sp = split(n, 4);
        let (model, acc) = train_logistic_probe(x.view(), &y, 39, &sp, &TrainConfig::default(), 2).unwrap();
        assert!(acc > 0.5);
        for i in 0..n {
            let logits = model.outputs(&[x[[i, 0]], x[[i, 1]]]);
            let argmax = (0..39).fold(0, |b, k| if logits[k] > logits[b] { k } else { b });
            assert!(argmax == 3 || argmax == 17);
        }
    }

    #[test]
    fn single_training_class_is_degenerate() {
        let x = Array2::from_shape_fn((40, 2), |(i, j)| (i + j) as f64);
        let y = vec![1; 40];
        assert!(matches!(
            train_logistic_probe(x.view(), &y, 2, &split(40, 1), &TrainConfig::default(), 0),
            Err(ProbeError::DegenerateTarget(_))
        ));
    }

    #[test]
    fn macro_accuracy_is_frame_count_invariant() {
        let correct = [true, false, true, true];
        let groups = [0, 0, 1, 1];
        assert_eq!(utterance_macro_accuracy(&correct, &groups), 0.75);
        let dup_correct = [true, true, false, false, true, true, true, true];
        let dup_groups = [0, 0, 0, 0, 1, 1, 1, 1];
        assert_eq!(utterance_macro_accuracy(&dup_correct, &dup_groups), 0.75);
    }
}
