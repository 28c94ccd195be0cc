use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::peak::{peak_position, peak_strength};
use super::MetricsError;
use crate::probe::LayerCurve;
use crate::repr::ProbeTargetSpec;
use crate::{Architecture, FeatureGroup};

/// Per-model group peak positions and strengths, in [`FeatureGroup::ALL`] order.
///
/// A `None` entry marks a group with no available curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintProfile {
    pub model_id: String,
    pub architecture: Architecture,
    pub param_count: u64,
    pub positions: [Option<f64>; 5],
    pub strengths: [Option<f64>; 5],
}

impl FingerprintProfile {
    pub fn from_positions(
        model_id: impl Into<String>,
        architecture: Architecture,
        param_count: u64,
        positions: [f64; 5],
    ) -> Self {
        Self {
            model_id: model_id.into(),
            architecture,
            param_count,
            positions: positions.map(Some),
            strengths: [None; 5],
        }
    }

    pub fn position(&self, group: FeatureGroup) -> Option<f64> {
        self.positions[group.index()]
    }

    pub fn is_complete(&self) -> bool {
        self.positions.iter().all(Option::is_some)
    }

    /// The 5-vector of positions, if no group is missing.
    pub fn position_vector(&self) -> Option<[f64; 5]> {
        if self.is_complete() {
            Some(self.positions.map(|p| p.unwrap()))
        } else {
            None
        }
    }

    pub fn missing_groups(&self) -> Vec<FeatureGroup> {
        FeatureGroup::ALL.into_iter().filter(|g| self.positions[g.index()].is_none()).collect()
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Aggregates one model's curves into a profile: each target's metric is
/// averaged over datasets first, then targets are averaged within a group.
///
/// Curves for targets not listed in `targets` are ignored. Within a target,
/// values are summed in dataset-id order so the result does not depend on the
/// order of `curves`.
pub fn aggregate_profile(
    model_id: &str,
    architecture: Architecture,
    param_count: u64,
    curves: &[LayerCurve],
    targets: &[ProbeTargetSpec],
) -> FingerprintProfile {
    let group_of: BTreeMap<&str, FeatureGroup> = targets.iter().map(|t| (t.name.as_str(), t.group)).collect();

    // target -> dataset -> (position, strength)
    let mut per_target: BTreeMap<&str, BTreeMap<&str, (f64, f64)>> = BTreeMap::new();
    for c in curves.iter().filter(|c| c.model_id == model_id) {
        if group_of.contains_key(c.target.as_str()) {
            per_target
                .entry(&c.target)
                .or_default()
                .insert(&c.dataset_id, (peak_position(c), peak_strength(c)));
        }
    }

    let mut pos_by_group: [Vec<f64>; 5] = Default::default();
    let mut str_by_group: [Vec<f64>; 5] = Default::default();
    for (target, datasets) in &per_target {
        let g = group_of[target].index();
        let positions: Vec<f64> = datasets.values().map(|v| v.0).collect();
        let strengths: Vec<f64> = datasets.values().map(|v| v.1).collect();
        pos_by_group[g].push(mean(&positions));
        str_by_group[g].push(mean(&strengths));
    }

    let summarize = |v: &Vec<f64>| if v.is_empty() { None } else { Some(mean(v)) };
    FingerprintProfile {
        model_id: model_id.to_string(),
        architecture,
        param_count,
        positions: std::array::from_fn(|g| summarize(&pos_by_group[g])),
        strengths: std::array::from_fn(|g| summarize(&str_by_group[g])),
    }
}

/// `to - from` for one group between two profiles, if both are present.
pub fn group_delta(from: &FingerprintProfile, to: &FingerprintProfile, group: FeatureGroup) -> Option<f64> {
    Some(super::positional_delta(from.position(group)?, to.position(group)?))
}

const PROFILE_HEADER: [&str; 8] =
    ["model_id", "architecture", "param_count", "acoustic", "gender", "accent", "phoneme", "duration"];

fn write_table<W: Write>(
    profiles: &[FingerprintProfile],
    writer: W,
    values: impl Fn(&FingerprintProfile) -> [Option<f64>; 5],
) -> Result<(), MetricsError> {
    let err = |e: csv::Error| MetricsError::Format(e.to_string());
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(PROFILE_HEADER).map_err(err)?;
    for p in profiles {
        let mut rec = vec![p.model_id.clone(), p.architecture.to_string(), p.param_count.to_string()];
        rec.extend(values(p).iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        wtr.write_record(rec).map_err(err)?;
    }
    wtr.flush().map_err(|e| MetricsError::Format(e.to_string()))
}

/// Writes profiles in the
/// `model_id,architecture,param_count,acoustic,gender,accent,phoneme,duration` layout.
pub fn write_profiles<W: Write>(profiles: &[FingerprintProfile], writer: W) -> Result<(), MetricsError> {
    write_table(profiles, writer, |p| p.positions)
}

/// Same layout as [`write_profiles`] with peak strengths in the group columns.
pub fn write_strengths<W: Write>(profiles: &[FingerprintProfile], writer: W) -> Result<(), MetricsError> {
    write_table(profiles, writer, |p| p.strengths)
}

/// Reads a profile table; empty group cells are absent groups.
pub fn read_profiles<R: Read>(reader: R) -> Result<Vec<FingerprintProfile>, MetricsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let head = rdr.headers().map_err(|e| MetricsError::Format(e.to_string()))?.clone();
    let idx: Vec<usize> = PROFILE_HEADER
        .iter()
        .map(|name| {
            head.iter()
                .position(|h| h.eq_ignore_ascii_case(name))
                .ok_or_else(|| MetricsError::Format(format!("missing column `{name}`")))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let line = line + 2;
        let rec = rec.map_err(|e| MetricsError::Format(e.to_string()))?;
        let cell = |k: usize| rec.get(idx[k]).unwrap_or("");
        let architecture: Architecture =
            cell(1).parse().map_err(|e| MetricsError::Format(format!("line {line}: {e}")))?;
        let param_count: u64 = parse_count(cell(2))
            .ok_or_else(|| MetricsError::Format(format!("line {line}: bad param_count `{}`", cell(2))))?;
        let mut positions = [None; 5];
        for (g, slot) in positions.iter_mut().enumerate() {
            let text = cell(3 + g);
            if !text.is_empty() {
                let v: f64 = text
                    .parse()
                    .map_err(|_| MetricsError::Format(format!("line {line}: bad value `{text}`")))?;
                if !v.is_finite() {
                    return Err(MetricsError::Format(format!("line {line}: non-finite value")));
                }
                *slot = Some(v);
            }
        }
        out.push(FingerprintProfile {
            model_id: cell(0).to_string(),
            architecture,
            param_count,
            positions,
            strengths: [None; 5],
        });
    }
    Ok(out)
}

/// Accepts plain integers and float notation such as `1.55e9`.
fn parse_count(text: &str) -> Option<u64> {
    if let Ok(v) = text.parse::<u64>() {
        return Some(v);
    }
    let v: f64 = text.parse().ok()?;
    (v.is_finite() && v >= 1.0).then(|| v.round() as u64)
}
