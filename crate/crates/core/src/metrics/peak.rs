use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::probe::LayerCurve;

/// Fraction of peak strength a layer must reach to count toward peak width.
pub const PEAK_WIDTH_FRACTION: f64 = 0.7;

/// Summary of one layer curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FingerprintMetrics {
    pub peak_position: f64,
    pub peak_strength: f64,
    pub peak_width: f64,
    /// `None` when every score is non-positive.
    pub entropy: Option<f64>,
}

/// Signed difference in peak position between two features or architectures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub from: String,
    pub to: String,
    pub delta: f64,
}

impl DeltaRecord {
    pub fn new(from: impl Into<String>, from_pos: f64, to: impl Into<String>, to_pos: f64) -> Self {
        Self { from: from.into(), to: to.into(), delta: positional_delta(from_pos, to_pos) }
    }

    pub fn swapped(&self) -> Self {
        Self { from: self.to.clone(), to: self.from.clone(), delta: -self.delta }
    }
}

fn argmax_earliest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (l, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = l;
        }
    }
    best
}

/// Normalized depth `argmax_l score(l) / L`; ties go to the earliest layer.
pub fn peak_position(curve: &LayerCurve) -> f64 {
    argmax_earliest(&curve.scores) as f64 / curve.num_blocks as f64
}

/// Maximum score over layers.
pub fn peak_strength(curve: &LayerCurve) -> f64 {
    curve.scores.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Fraction of the `L + 1` layers whose (non-negative) score reaches 70% of
/// the (non-negative) peak. A non-positive peak gives 1.0.
pub fn peak_width(curve: &LayerCurve) -> f64 {
    let strength = peak_strength(curve);
    if strength <= 0.0 {
        return 1.0;
    }
    let threshold = PEAK_WIDTH_FRACTION * strength;
    let qualifying = curve.scores.iter().filter(|s| s.max(0.0) >= threshold).count();
    qualifying as f64 / curve.scores.len() as f64
}

/// Shannon entropy (nats) of the score distribution over layers, with negative
/// scores clamped to zero.
pub fn layer_entropy(curve: &LayerCurve) -> Result<f64, MetricsError> {
    let clamped: Vec<f64> = curve.scores.iter().map(|s| s.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(MetricsError::UndefinedEntropy);
    }
    let h = clamped
        .iter()
        .filter(|&&s| s > 0.0)
        .map(|&s| {
            let q = s / total;
            -q * q.ln()
        })
        .sum::<f64>();
    Ok(h.max(0.0))
}

/// `to - from`: positive when the second feature peaks later.
pub fn positional_delta(from: f64, to: f64) -> f64 {
    to - from
}

pub fn compute_metrics(curve: &LayerCurve) -> FingerprintMetrics {
    FingerprintMetrics {
        peak_position: peak_position(curve),
        peak_strength: peak_strength(curve),
        peak_width: peak_width(curve),
        entropy: layer_entropy(curve).ok(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn curve(scores: &[f64]) -> LayerCurve {
        LayerCurve::new("m", "d", "t", scores.to_vec())
    }

    #[test]
    fn position_examples() {
        assert_eq!(peak_position(&curve(&[0.2, 0.5, 0.4])), 0.5);
        assert_eq!(peak_position(&curve(&[0.5, 0.5])), 0.0);
        assert_eq!(peak_position(&curve(&[0.1, 0.2, 0.3, 0.4])), 1.0);
    }

    #[test]
    fn strength_examples() {
        assert_eq!(peak_strength(&curve(&[0.2, 0.5, 0.4])), 0.5);
        assert_eq!(peak_strength(&curve(&[0.37; 5])), 0.37);
    }

    #[test]
    fn width_examples() {
        assert_eq!(peak_width(&curve(&[1.0, 0.6, 0.8])), 2.0 / 3.0);
        assert_eq!(peak_width(&curve(&[0.4; 6])), 1.0);
        assert_eq!(peak_width(&curve(&[0.0, 0.0, 0.9, 0.0])), 0.25);
        assert_eq!(peak_width(&curve(&[-0.3, -0.1])), 1.0);
    }

    #[test]
    fn entropy_examples() {
        let h = layer_entropy(&curve(&[0.3; 4])).unwrap();
        assert!((h - 4f64.ln()).abs() < 1e-12);
        assert_eq!(layer_entropy(&curve(&[0.0, 0.7, 0.0])).unwrap(), 0.0);
        // -(0.5 ln 0.5 + 2 * 0.25 ln 0.25) = 1.5 ln 2
        let h = layer_entropy(&curve(&[0.5, 0.25, 0.25])).unwrap();
        assert!((h - 1.5 * 2f64.ln()).abs() < 1e-12);
        assert!((h - 1.0397).abs() < 5e-5);
        assert!(matches!(layer_entropy(&curve(&[-0.2, 0.0])), Err(MetricsError::UndefinedEntropy)));
        // negatives are clamped, not subtracted
        let h = layer_entropy(&curve(&[-5.0, 0.5, 0.5])).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn delta_is_antisymmetric() {
        assert_eq!(positional_delta(0.2, 0.2), 0.0);
        let r = DeltaRecord::new("gender", 0.3, "phoneme", 0.55);
        assert!((r.delta - 0.25).abs() < 1e-15);
        assert_eq!(r.swapped().delta, -r.delta);
        assert_eq!(positional_delta(0.7, 0.1), -positional_delta(0.1, 0.7));
    }

    proptest! {
        #[test]
        fn metric_invariants(scores in prop::collection::vec(-1.0f64..1.0, 2..40)) {
            let c = curve(&scores);
            let l = c.num_blocks as f64;
            let pos = peak_position(&c);
            // exact multiple of 1/L
            prop_assert_eq!((pos * l).round() / l, pos);
            prop_assert!((0.0..=1.0).contains(&pos));

            let w = peak_width(&c);
            prop_assert!(w <= 1.0);
            if peak_strength(&c) > 0.0 {
                prop_assert!(w >= 1.0 / (l + 1.0));
            }
            if let Ok(h) = layer_entropy(&c) {
                prop_assert!(h >= 0.0);
                prop_assert!(h <= (l + 1.0).ln() + 1e-12);
            }
        }

        #[test]
        fn position_is_invariant_to_increasing_transforms(
            scores in prop::collection::vec(-1.0f64..1.0, 2..30),
            a in 0.1f64..5.0,
            b in -3.0f64..3.0,
        ) {
            let c = curve(&scores);
            let affine = curve(&scores.iter().map(|s| a * s + b).collect::<Vec<_>>());
            let cubic = curve(&scores.iter().map(|s| s.powi(3) + s).collect::<Vec<_>>());
            prop_assert_eq!(peak_position(&c), peak_position(&affine));
            prop_assert_eq!(peak_position(&c), peak_position(&cubic));
        }
    }
}
