//! Per-layer linear probes and the score curves they produce.

mod adam;
mod curve;
mod dataset;
mod linear;
mod logistic;
mod split;

use std::path::PathBuf;

use thiserror::Error;

pub use adam::TrainConfig;
pub use curve::{probe_curve, read_curves, write_curves, CurveOptions, LayerCurve};
pub use dataset::{build_rows, ProbeRows, RowTargets};
pub use linear::{r_squared, train_linear_probe, Solver};
pub use logistic::{train_logistic_probe, utterance_macro_accuracy};
pub use split::{make_splits, Bucket, RowSplit, SplitAssignment, SplitPolicy};

/// Fitted linear read-out in the units of the raw hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    /// `hidden_dim x output_dim`, row-major.
    pub weights: ndarray::Array2<f64>,
    pub bias: Vec<f64>,
    pub kind: ProbeModelKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeModelKind {
    Regression,
    Classification,
}

impl ProbeModel {
    pub fn output_dim(&self) -> usize {
        self.bias.len()
    }

    /// Raw outputs (prediction or logits) for one feature row.
    pub fn outputs(&self, row: &[f64]) -> Vec<f64> {
        (0..self.output_dim())
            .map(|k| {
                self.bias[k] + row.iter().enumerate().map(|(j, x)| x * self.weights[[j, k]]).sum::<f64>()
            })
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("split policy error: {0}")]
    Policy(String),
    #[error("degenerate target: {0}")]
    DegenerateTarget(String),
    #[error("target `{0}` skipped: column absent")]
    SkippedTarget(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("split does not cover labels: {0}")]
    Split(String),
    #[error("curve format error: {0}")]
    Format(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
