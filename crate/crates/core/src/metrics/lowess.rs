use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::rng::stream_rng;
use crate::stats::percentile;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowessOptions {
    /// Fraction of points in each local neighbourhood, in (0, 1].
    pub bandwidth: f64,
    pub resamples: usize,
    pub level: f64,
    pub grid_points: usize,
    /// Min-max normalize the scores before smoothing.
    pub normalize: bool,
    pub seed: u64,
}

impl Default for LowessOptions {
    fn default() -> Self {
        Self { bandwidth: 0.3, resamples: 1000, level: 0.95, grid_points: 101, normalize: true, seed: 0 }
    }
}

/// Smoothed score over normalized depth with a pointwise percentile band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub depth: Vec<f64>,
    pub fit: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
}

/// Rescales scores to [0, 1]; a constant set is returned unchanged.
pub fn minmax_normalize(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let (lo, hi) =
        points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return points.to_vec();
    }
    points.iter().map(|&(x, y)| (x, (y - lo) / (hi - lo))).collect()
}

fn tricube(u: f64) -> f64 {
    if u < 1.0 {
        (1.0 - u * u * u).powi(3)
    } else {
        0.0
    }
}

/// Weighted local-linear solve; `None` when the weighted depths have no spread.
fn weighted_line(points: &[(f64, f64)], weights: &[f64], x0: f64, min_spread: f64) -> Option<f64> {
    let sw: f64 = weights.iter().sum();
    if sw.is_nan() || sw <= 0.0 {
        return None;
    }
    let xm = points.iter().zip(weights).map(|(p, w)| w * p.0).sum::<f64>() / sw;
    let ym = points.iter().zip(weights).map(|(p, w)| w * p.1).sum::<f64>() / sw;
    let sxx: f64 = points.iter().zip(weights).map(|(p, w)| w * (p.0 - xm).powi(2)).sum();
    if sxx / sw <= min_spread * min_spread {
        return None;
    }
    let sxy: f64 = points.iter().zip(weights).map(|(p, w)| w * (p.0 - xm) * (p.1 - ym)).sum();
    Some(ym + sxy / sxx * (x0 - xm))
}

/// Local-linear tricube fit at `x0`.
///
/// The neighbourhood radius is the distance to the `ceil(bandwidth * n)`-th
/// nearest point; it grows to the next neighbour whenever the weighted depths
/// would be degenerate, and finally to twice the farthest distance.
pub fn lowess_fit_at(points: &[(f64, f64)], x0: f64, bandwidth: f64) -> f64 {
    let n = points.len();
    let (xmin, xmax) =
        points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let min_spread = 1e-9 * (xmax - xmin);
    let dist: Vec<f64> = points.iter().map(|p| (p.0 - x0).abs()).collect();
    let mut sorted = dist.clone();
    sorted.sort_by(f64::total_cmp);
    let k0 = ((bandwidth * n as f64).ceil() as usize).clamp(1, n);
    let mut weights = vec![0.0; n];
    let mut last_h = f64::NAN;
    for &h in &sorted[k0 - 1..] {
        if h <= 0.0 || h == last_h {
            continue;
        }
        last_h = h;
        for (w, d) in weights.iter_mut().zip(&dist) {
            *w = tricube(d / h);
        }
        if let Some(v) = weighted_line(points, &weights, x0, min_spread) {
            return v;
        }
    }
    let h = 2.0 * sorted[n - 1];
    for (w, d) in weights.iter_mut().zip(&dist) {
        *w = tricube(d / h);
    }
    weighted_line(points, &weights, x0, min_spread).expect("points span at least two depths")
}

fn fit_grid(points: &[(f64, f64)], grid: &[f64], bandwidth: f64) -> Vec<f64> {
    grid.iter().map(|&x| lowess_fit_at(points, x, bandwidth)).collect()
}

fn has_spread(points: &[(f64, f64)]) -> bool {
    points.iter().any(|p| p.0 != points[0].0)
}

/// LOWESS trajectory over a uniform depth grid on [0, 1] with a percentile
/// bootstrap band (points resampled with replacement; each resample on its
/// own random stream).
pub fn lowess_trajectory(points: &[(f64, f64)], options: &LowessOptions) -> Result<Trajectory, MetricsError> {
    if points.len() < 5 {
        return Err(MetricsError::InvalidInput(format!("need at least 5 points, got {}", points.len())));
    }
    if !(options.bandwidth > 0.0 && options.bandwidth <= 1.0) {
        return Err(MetricsError::InvalidInput(format!(
            "bandwidth must be in (0, 1], got {}",
            options.bandwidth
        )));
    }
    if options.grid_points < 2 || !(options.level > 0.0 && options.level < 1.0) {
        return Err(MetricsError::InvalidInput("need >= 2 grid points and a level in (0, 1)".into()));
    }
    if points.iter().any(|p| !p.0.is_finite() || !p.1.is_finite()) {
        return Err(MetricsError::InvalidInput("non-finite point".into()));
    }
    if !has_spread(points) {
        return Err(MetricsError::DegenerateFit(format!("all points at depth {}", points[0].0)));
    }
    let points = if options.normalize { minmax_normalize(points) } else { points.to_vec() };
    let m = options.grid_points;
    let grid: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
    let fit = fit_grid(&points, &grid, options.bandwidth);

    let n = points.len();
    let boot: Vec<Vec<f64>> = (0..options.resamples)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = stream_rng(options.seed, b as u64);
            let sample: Vec<(f64, f64)> = (0..n).map(|_| points[rng.random_range(0..n)]).collect();
            has_spread(&sample).then(|| fit_grid(&sample, &grid, options.bandwidth))
        })
        .collect();

    let alpha = (1.0 - options.level) / 2.0;
    let (mut ci_low, mut ci_high) = (Vec::with_capacity(m), Vec::with_capacity(m));
    for (i, f) in fit.iter().enumerate() {
        if boot.is_empty() {
            ci_low.push(*f);
            ci_high.push(*f);
            continue;
        }
        let mut column: Vec<f64> = boot.iter().map(|b| b[i]).collect();
        column.sort_by(f64::total_cmp);
        ci_low.push(percentile(&column, alpha));
        ci_high.push(percentile(&column, 1.0 - alpha));
    }
    Ok(Trajectory { depth: grid, fit, ci_low, ci_high })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector2};

    fn opts(bandwidth: f64, normalize: bool) -> LowessOptions {
        LowessOptions { bandwidth, resamples: 200, normalize, seed: 17, ..Default::default() }
    }

    #[test]
    fn constant_input_gives_constant_curve_and_zero_width_band() {
        let points: Vec<(f64, f64)> = (0..20).map(|i| (i as f64 / 19.0, 0.42)).collect();
        let t = lowess_trajectory(&points, &opts(0.3, true)).unwrap();
        assert_eq!(t.depth.len(), 101);
        for i in 0..101 {
            assert!((t.fit[i] - 0.42).abs() < 1e-12);
            assert!((t.ci_high[i] - t.ci_low[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_input_is_reproduced_exactly() {
        let points: Vec<(f64, f64)> = (0..25)
            .map(|i| {
                let x = (i as f64 * 0.37).fract();
                (x, 0.8 * x - 0.1)
            })
            .collect();
        for bw in [0.05, 0.2, 0.3, 0.7, 1.0] {
            let raw = lowess_trajectory(&points, &opts(bw, false)).unwrap();
            for (x, f) in raw.depth.iter().zip(&raw.fit) {
                assert!((f - (0.8 * x - 0.1)).abs() < 1e-9, "bw={bw} x={x} f={f}");
            }
            // normalization maps the line to another line
            let (lo, hi) = points.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.1), a.1.max(p.1)));
            let norm = lowess_trajectory(&points, &opts(bw, true)).unwrap();
            for (x, f) in norm.depth.iter().zip(&norm.fit) {
                let expected = (0.8 * x - 0.1 - lo) / (hi - lo);
                assert!((f - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fit_matches_direct_weighted_least_squares() {
        let mut rng = stream_rng(99, 0);
        let points: Vec<(f64, f64)> = (0..60).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        let bw = 0.3;
        let k = (bw * 60.0f64).ceil() as usize;
        let t = lowess_trajectory(&points, &opts(bw, false)).unwrap();
        for (x0, f) in t.depth.iter().zip(&t.fit) {
            // independent route: tricube weights on the k-th nearest distance,
            // then the 2x2 weighted normal equations
            let mut d: Vec<f64> = points.iter().map(|p| (p.0 - x0).abs()).collect();
            let dist = d.clone();
            d.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let h = d[k - 1];
            let mut a = Matrix2::zeros();
            let mut b = Vector2::zeros();
            for (p, di) in points.iter().zip(&dist) {
                let u = di / h;
                let w = if u < 1.0 { (1.0 - u.powi(3)).powi(3) } else { 0.0 };
                let row = Vector2::new(1.0, p.0);
                a += w * row * row.transpose();
                b += w * p.1 * row;
            }
            let beta = a.lu().solve(&b).unwrap();
            let direct = beta[0] + beta[1] * x0;
            assert!((f - direct).abs() < 1e-9, "x0={x0}: {f} vs {direct}");
        }
    }

    #[test]
    fn quantized_depths_do_not_break_the_fit() {
        // two depths only: every neighbourhood must grow to span both
        let points: Vec<(f64, f64)> = (0..10).map(|i| ((i % 2) as f64, (i % 2) as f64 * 2.0)).collect();
        let t = lowess_trajectory(&points, &opts(0.3, false)).unwrap();
        assert!((t.fit[50] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let same: Vec<(f64, f64)> = (0..8).map(|i| (0.5, i as f64)).collect();
        assert!(matches!(lowess_trajectory(&same, &opts(0.3, true)), Err(MetricsError::DegenerateFit(_))));
        let few = [(0.0, 1.0), (1.0, 2.0)];
        assert!(lowess_trajectory(&few, &opts(0.3, true)).is_err());
        let ok: Vec<(f64, f64)> = (0..8).map(|i| (i as f64 / 7.0, i as f64)).collect();
        assert!(lowess_trajectory(&ok, &opts(0.0, true)).is_err());
        assert!(lowess_trajectory(&ok, &opts(1.5, true)).is_err());
    }

    #[test]
    fn band_is_seed_deterministic() {
        let mut rng = stream_rng(5, 0);
        let points: Vec<(f64, f64)> = (0..40).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
        let a = lowess_trajectory(&points, &opts(0.4, true)).unwrap();
        let b = lowess_trajectory(&points, &opts(0.4, true)).unwrap();
        assert_eq!(a, b);
        for i in 0..101 {
            assert!(a.ci_low[i] <= a.ci_high[i]);
        }
    }
}
