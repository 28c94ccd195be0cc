use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};

use super::ProbeError;
use crate::repr::{LabelRow, LabelTable, Pooling, ProbeKind, ProbeTargetSpec, TargetColumn};

#[derive(Debug, Clone, PartialEq)]
pub enum RowTargets {
    Real(Vec<f64>),
    Class(Vec<usize>),
}

impl RowTargets {
    pub fn len(&self) -> usize {
        match self {
            RowTargets::Real(v) => v.len(),
            RowTargets::Class(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Training rows for one target, independent of layer: each row averages the
/// hidden states of its frames.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRows {
    pub frames: Vec<Vec<usize>>,
    pub targets: RowTargets,
    pub utterances: Vec<String>,
}

impl ProbeRows {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `rows x hidden` feature matrix from one `frames x hidden` layer.
    pub fn features(&self, layer: ArrayView2<'_, f32>) -> Result<Array2<f64>, ProbeError> {
        let (num_frames, hidden) = layer.dim();
        let mut x = Array2::<f64>::zeros((self.len(), hidden));
        for (r, frames) in self.frames.iter().enumerate() {
            for &f in frames {
                if f >= num_frames {
                    return Err(ProbeError::Shape(format!(
                        "frame_index {f} out of range for {num_frames} frames"
                    )));
                }
                for (j, v) in layer.row(f).iter().enumerate() {
                    x[[r, j]] += f64::from(*v);
                }
            }
            let scale = 1.0 / frames.len() as f64;
            x.row_mut(r).mapv_inplace(|v| v * scale);
        }
        Ok(x)
    }
}

fn class_of(row: &LabelRow, column: TargetColumn) -> Option<usize> {
    match column {
        TargetColumn::Gender => row.gender.map(|g| g.class_index()),
        TargetColumn::Accent => row.accent_l1.map(|a| a.class_index()),
        TargetColumn::Phoneme => row.phoneme.map(usize::from),
        _ => None,
    }
}

fn real_of(row: &LabelRow, column: TargetColumn) -> Option<f64> {
    match column {
        TargetColumn::Duration => row.duration_ms,
        TargetColumn::Acoustic(k) => row.acoustic[k],
        _ => None,
    }
}

/// Pools labelled frames into probe rows according to the target's pooling.
///
/// Frame pooling gives one row per labelled frame. Utterance pooling averages an
/// utterance's frames and its target values. Segment pooling merges runs of
/// consecutive frames that share phoneme and duration labels.
pub fn build_rows(labels: &LabelTable, target: &ProbeTargetSpec) -> Result<ProbeRows, ProbeError> {
    let mut by_utt: BTreeMap<&str, Vec<&LabelRow>> = BTreeMap::new();
    for row in labels.rows.iter().filter(|r| r.has(target.column)) {
        by_utt.entry(&row.utterance_id).or_default().push(row);
    }
    if by_utt.is_empty() {
        return Err(ProbeError::SkippedTarget(target.name.clone()));
    }
    for rows in by_utt.values_mut() {
        rows.sort_by_key(|r| r.frame_index);
    }

    let mut frames = Vec::new();
    let mut utterances = Vec::new();
    let mut reals = Vec::new();
    let mut classes = Vec::new();
    for (utt, rows) in &by_utt {
        match target.pooling {
            Pooling::Frame => {
                for r in rows {
                    frames.push(vec![r.frame_index]);
                    utterances.push(utt.to_string());
                    match target.kind {
                        ProbeKind::Classification { .. } => classes.push(class_of(r, target.column).unwrap()),
                        ProbeKind::Regression => reals.push(real_of(r, target.column).unwrap()),
                    }
                }
            }
            Pooling::Utterance => {
                frames.push(rows.iter().map(|r| r.frame_index).collect());
                utterances.push(utt.to_string());
                match target.kind {
                    ProbeKind::Classification { .. } => {
                        classes.push(class_of(rows[0], target.column).unwrap())
                    }
                    ProbeKind::Regression => {
                        let sum: f64 = rows.iter().map(|r| real_of(r, target.column).unwrap()).sum();
                        reals.push(sum / rows.len() as f64);
                    }
                }
            }
            Pooling::Segment => {
                let mut start = 0;
                for i in 1..=rows.len() {
                    let boundary = i == rows.len() || {
                        let (a, b) = (rows[i - 1], rows[i]);
                        b.frame_index != a.frame_index + 1
                            || a.phoneme != b.phoneme
                            || real_of(a, target.column).map(f64::to_bits)
                                != real_of(b, target.column).map(f64::to_bits)
                    };
                    if boundary {
                        let seg = &rows[start..i];
                        frames.push(seg.iter().map(|r| r.frame_index).collect());
                        utterances.push(utt.to_string());
                        match target.kind {
                            ProbeKind::Classification { .. } => {
                                classes.push(class_of(seg[0], target.column).unwrap())
                            }
                            ProbeKind::Regression => reals.push(real_of(seg[0], target.column).unwrap()),
                        }
                        start = i;
                    }
                }
            }
        }
    }

    let targets = match target.kind {
        ProbeKind::Classification { num_classes } => {
            if let Some(c) = classes.iter().find(|&&c| c >= num_classes) {
                return Err(ProbeError::Shape(format!(
                    "class {c} out of range for `{}` ({num_classes} classes)",
                    target.name
                )));
            }
            RowTargets::Class(classes)
        }
        ProbeKind::Regression => RowTargets::Real(reals),
    };
    Ok(ProbeRows { frames, targets, utterances })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{builtin_targets, Gender};
    use ndarray::array;

    fn target(name: &str) -> ProbeTargetSpec {
        builtin_targets().into_iter().find(|t| t.name == name).unwrap()
    }

    fn labels() -> LabelTable {
        let mut rows = Vec::new();
        // utterance a: frames 0..4, phonemes [1,1,2,2], durations 40,40,30,30
        for f in 0..4 {
            let mut r = LabelRow::new("a", f);
            r.gender = Some(Gender::M);
            r.phoneme = Some(if f < 2 { 1 } else { 2 });
            r.duration_ms = Some(if f < 2 { 40.0 } else { 30.0 });
            r.acoustic[1] = Some(100.0);
            rows.push(r);
        }
        // utterance b: frames 4..6, a single segment
        for f in 4..6 {
            let mut r = LabelRow::new("b", f);
            r.gender = Some(Gender::F);
            r.phoneme = Some(7);
            r.duration_ms = Some(20.0);
            r.acoustic[1] = Some(200.0);
            rows.push(r);
        }
        LabelTable::new(rows)
    }

    #[test]
    fn pooling_levels() {
        let l = labels();
        let g = build_rows(&l, &target("gender")).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.targets, RowTargets::Class(vec![0, 0, 0, 0, 1, 1]));

        let d = build_rows(&l, &target("duration")).unwrap();
        assert_eq!(d.frames, vec![vec![0, 1], vec![2, 3], vec![4, 5]]);
        assert_eq!(d.targets, RowTargets::Real(vec![40.0, 30.0, 20.0]));

        let a = build_rows(&l, &target("f0_mean")).unwrap();
        assert_eq!(a.frames, vec![vec![0, 1, 2, 3], vec![4, 5]]);
        assert_eq!(a.targets, RowTargets::Real(vec![100.0, 200.0]));
        assert_eq!(a.utterances, vec!["a", "b"]);
    }

    #[test]
    fn absent_column_is_skipped() {
        let err = build_rows(&labels(), &target("accent")).unwrap_err();
        assert!(matches!(err, ProbeError::SkippedTarget(ref n) if n == "accent"));
    }

    #[test]
    fn features_average_frames() {
        let rows = ProbeRows {
            frames: vec![vec![0, 1], vec![2]],
            targets: RowTargets::Real(vec![0.0, 1.0]),
            utterances: vec!["a".into(), "b".into()],
        };
        let layer = array![[1.0f32, 2.0], [3.0, 4.0], [5.0, 6.0]];
        let x = rows.features(layer.view()).unwrap();
        assert_eq!(x, array![[2.0, 3.0], [5.0, 6.0]]);
        let short = array![[1.0f32, 2.0]];
        assert!(rows.features(short.view()).is_err());
    }
}
