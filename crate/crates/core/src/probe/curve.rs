use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::TrainConfig;
use super::dataset::{build_rows, RowTargets};
use super::linear::{train_linear_probe, Solver};
use super::logistic::train_logistic_probe;
use super::split::SplitAssignment;
use super::ProbeError;
use crate::repr::{LabelTable, ModelManifest, ProbeKind, ProbeTargetSpec, TensorStack};
use crate::rng::{derive_seed, label_key};

/// Probe score per layer for one (model, dataset, target).
///
/// Entry `l` is test accuracy (classification) or R² (regression) at layer `l`;
/// regression scores may be negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCurve {
    pub model_id: String,
    pub dataset_id: String,
    pub target: String,
    pub scores: Vec<f64>,
    pub num_blocks: usize,
}

impl LayerCurve {
    pub fn new(
        model_id: impl Into<String>,
        dataset_id: impl Into<String>,
        target: impl Into<String>,
        scores: Vec<f64>,
    ) -> Self {
        let num_blocks = scores.len().saturating_sub(1);
        Self {
            model_id: model_id.into(),
            dataset_id: dataset_id.into(),
            target: target.into(),
            scores,
            num_blocks,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    pub solver: Solver,
    pub train: TrainConfig,
}

/// Trains one probe per layer on a shared split.
///
/// Layers run in parallel; every layer uses the same row split and the same
/// shuffling seed, so the result does not depend on the thread count.
pub fn probe_curve(
    stack: &TensorStack,
    manifest: &ModelManifest,
    labels: &LabelTable,
    target: &ProbeTargetSpec,
    split: &SplitAssignment,
    seed: u64,
    options: &CurveOptions,
) -> Result<LayerCurve, ProbeError> {
    let rows = build_rows(labels, target)?;
    let row_split = split.rows(&rows.utterances)?;
    let probe_seed = derive_seed(seed, &[label_key(&target.name)]);

    let scores = (0..stack.num_layers_plus_1())
        .into_par_iter()
        .map(|layer| {
            let x = rows.features(stack.layer(layer))?;
            let score = match (&rows.targets, target.kind) {
                (RowTargets::Real(y), ProbeKind::Regression) => {
                    train_linear_probe(x.view(), y, &row_split, options.solver, &options.train, probe_seed)?.1
                }
                (RowTargets::Class(y), ProbeKind::Classification { num_classes }) => {
                    train_logistic_probe(x.view(), y, num_classes, &row_split, &options.train, probe_seed)?.1
                }
                _ => unreachable!("row targets follow the target kind"),
            };
            Ok(score)
        })
        .collect::<Result<Vec<f64>, ProbeError>>()?;

    Ok(LayerCurve {
        model_id: manifest.model_id.clone(),
        dataset_id: manifest.dataset_id.clone(),
        target: target.name.clone(),
        num_blocks: stack.num_blocks(),
        scores,
    })
}

#[derive(Serialize, Deserialize)]
struct CurveRecord {
    model_id: String,
    dataset_id: String,
    target: String,
    layer_index: usize,
    score: f64,
}

/// Writes curves as `model_id,dataset_id,target,layer_index,score` rows.
pub fn write_curves<W: Write>(curves: &[LayerCurve], writer: W) -> Result<(), ProbeError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| ProbeError::Format(e.to_string());
    for c in curves {
        for (layer_index, &score) in c.scores.iter().enumerate() {
            wtr.serialize(CurveRecord {
                model_id: c.model_id.clone(),
                dataset_id: c.dataset_id.clone(),
                target: c.target.clone(),
                layer_index,
                score,
            })
            .map_err(err)?;
        }
    }
    wtr.flush().map_err(|e| ProbeError::Format(e.to_string()))
}

/// Reads curves written by [`write_curves`]; rows may come in any order but
/// every curve must cover layers `0..=L` exactly once.
pub fn read_curves<R: Read>(reader: R) -> Result<Vec<LayerCurve>, ProbeError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut grouped: BTreeMap<(String, String, String), BTreeMap<usize, f64>> = BTreeMap::new();
    for rec in rdr.deserialize::<CurveRecord>() {
        let rec = rec.map_err(|e| ProbeError::Format(e.to_string()))?;
        if !rec.score.is_finite() {
            return Err(ProbeError::Format(format!(
                "non-finite score for {}/{}/{} layer {}",
                rec.model_id, rec.dataset_id, rec.target, rec.layer_index
            )));
        }
        let layers = grouped.entry((rec.model_id, rec.dataset_id, rec.target)).or_default();
        if layers.insert(rec.layer_index, rec.score).is_some() {
            return Err(ProbeError::Format(format!("duplicate layer {}", rec.layer_index)));
        }
    }
    grouped
        .into_iter()
        .map(|((model_id, dataset_id, target), layers)| {
            let n = layers.len();
            if n < 2 || layers.keys().copied().ne(0..n) {
                return Err(ProbeError::Format(format!(
                    "curve {model_id}/{dataset_id}/{target} must cover layers 0..=L with L >= 1"
                )));
            }
            Ok(LayerCurve::new(model_id, dataset_id, target, layers.into_values().collect()))
        })
        .collect()
}

impl LayerCurve {
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<LayerCurve>, ProbeError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| ProbeError::Io { path: path.to_path_buf(), source })?;
        read_curves(file)
    }

    pub fn write_csv(curves: &[LayerCurve], path: impl AsRef<Path>) -> Result<(), ProbeError> {
        let path = path.as_ref();
        let file =
            File::create(path).map_err(|source| ProbeError::Io { path: path.to_path_buf(), source })?;
        write_curves(curves, file)
    }
}
