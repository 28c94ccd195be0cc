use std::fs;
use std::path::{Path, PathBuf};

use layerprint_core::stats::{group_means, GroupMean, StatReport, TTestResult};
use layerprint_core::{FeatureGroup, FingerprintProfile};
use serde::Serialize;

use crate::error::PipelineError;
use crate::stages::{write_json, TrajectoryRow};

pub const REPORT_DIR: &str = "report";
pub const NO_COMPARISONS: &str = "no comparisons run";

/// Fixed three-decimal rendering; negative zero prints as zero.
pub fn fmt3(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn opt3(x: Option<f64>) -> String {
    x.map(fmt3).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct ReportDoc<'a> {
    comparisons_run: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    marker: Option<&'static str>,
    seed: Option<u64>,
    bootstrap_resamples: Option<usize>,
    models: usize,
    group_means: Vec<GroupMean>,
    stats: Option<&'a StatReport>,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write(&self, out: &Path, rel: &str) -> Result<PathBuf, PipelineError> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| PipelineError::module(rel, e);
        wtr.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            wtr.write_record(r).map_err(io)?;
        }
        let bytes = wtr.into_inner().map_err(|e| PipelineError::module(rel, e.to_string()))?;
        let path = out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
        Ok(PathBuf::from(rel))
    }
}

fn ttest_cells(r: &TTestResult) -> Vec<String> {
    vec![
        r.n_a.to_string(),
        r.n_b.to_string(),
        fmt3(r.mean_a),
        fmt3(r.mean_b),
        fmt3(r.delta),
        fmt3(r.t),
        fmt3(r.p),
        fmt3(r.cohens_d),
    ]
}

fn group_name(g: Option<FeatureGroup>) -> String {
    g.map(|g| g.as_str().to_string()).unwrap_or_default()
}

fn rel(parts: &[&str]) -> String {
    let mut s = String::from(REPORT_DIR);
    for p in parts {
        s.push('/');
        s.push_str(p);
    }
    s
}

/// Writes `report/report.json`, three-decimal tables under `report/tables`
/// and plot data under `report/plots`. Returns paths relative to `out`.
pub fn emit_report(
    out: &Path,
    profiles: &[FingerprintProfile],
    stats: Option<&StatReport>,
    trajectories: &[TrajectoryRow],
    seed: Option<u64>,
    resamples: Option<usize>,
) -> Result<Vec<PathBuf>, PipelineError> {
    let dir = out.join(REPORT_DIR);
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    }
    let stats = stats.filter(|s| !s.is_empty());
    let means = group_means(profiles);
    let mut written = Vec::new();

    let doc = ReportDoc {
        comparisons_run: stats.is_some(),
        marker: stats.is_none().then_some(NO_COMPARISONS),
        seed,
        bootstrap_resamples: resamples,
        models: profiles.len(),
        group_means: means.clone(),
        stats,
    };
    written.push(write_json(out, &rel(&["report.json"]), &doc)?);

    let mut t =
        Table::new(&["model_id", "architecture", "acoustic", "gender", "accent", "phoneme", "duration"]);
    for p in profiles {
        let mut row = vec![p.model_id.clone(), p.architecture.as_str().to_string()];
        row.extend(p.positions.iter().map(|v| opt3(*v)));
        t.push(row);
    }
    written.push(t.write(out, &rel(&["tables", "profiles.csv"]))?);

    let mut t = Table::new(&["group", "architecture", "n", "mean", "std_error"]);
    for m in &means {
        t.push(vec![
            m.group.as_str().into(),
            m.architecture.as_str().into(),
            m.n.to_string(),
            fmt3(m.mean),
            fmt3(m.std_error),
        ]);
    }
    written.push(t.write(out, &rel(&["plots", "group_peaks.csv"]))?);

    let mut by_group: Vec<(FeatureGroup, Vec<&TrajectoryRow>)> = Vec::new();
    for row in trajectories {
        match by_group.iter_mut().find(|(g, _)| *g == row.group) {
            Some((_, rows)) => rows.push(row),
            None => by_group.push((row.group, vec![row])),
        }
    }
    by_group.sort_by_key(|(g, _)| *g);
    for (group, rows) in by_group {
        let mut t = Table::new(&["architecture", "depth", "fit", "ci_low", "ci_high"]);
        for r in rows {
            t.push(vec![
                r.architecture.as_str().into(),
                fmt3(r.depth),
                fmt3(r.fit),
                fmt3(r.ci_low),
                fmt3(r.ci_high),
            ]);
        }
        written.push(t.write(out, &rel(&["plots", &format!("trajectory_{}.csv", group.as_str())]))?);
    }

    let Some(stats) = stats else {
        return Ok(written);
    };

    if !stats.ttests.is_empty() {
        let mut t = Table::new(&[
            "group",
            "n_conformer",
            "n_transformer",
            "conformer_mean",
            "transformer_mean",
            "delta",
            "t",
            "p",
            "cohens_d",
            "bonferroni",
        ]);
        for r in &stats.ttests {
            let mut row = vec![group_name(r.group)];
            row.extend(ttest_cells(r));
            row.push(r.bonferroni_significant.to_string());
            t.push(row);
        }
        written.push(t.write(out, &rel(&["tables", "ttests.csv"]))?);
    }

    if !stats.bootstrap.is_empty() {
        let mut t = Table::new(&["group", "delta", "ci_low", "ci_high", "resamples", "level"]);
        for b in &stats.bootstrap {
            t.push(vec![
                group_name(b.group),
                fmt3(b.delta),
                fmt3(b.ci_low),
                fmt3(b.ci_high),
                b.resamples.to_string(),
                fmt3(b.level),
            ]);
        }
        written.push(t.write(out, &rel(&["tables", "bootstrap.csv"]))?);
    }

    if !stats.regressions.is_empty() {
        let mut t = Table::new(&[
            "group",
            "n",
            "beta_arch",
            "se_arch",
            "p_arch",
            "beta_log_params",
            "se_log_params",
            "p_log_params",
            "std_beta_arch",
            "std_beta_log_params",
            "r_squared",
        ]);
        for r in &stats.regressions {
            t.push(vec![
                r.group.as_str().into(),
                r.n.to_string(),
                fmt3(r.beta_arch),
                fmt3(r.se_arch),
                fmt3(r.p_arch),
                fmt3(r.beta_log_params),
                fmt3(r.se_log_params),
                fmt3(r.p_log_params),
                fmt3(r.std_beta_arch),
                fmt3(r.std_beta_log_params),
                fmt3(r.r_squared),
            ]);
        }
        written.push(t.write(out, &rel(&["tables", "regression.csv"]))?);
    }

    if let Some(c) = &stats.classifier {
        let mut t = Table::new(&["group", "coefficient", "rank"]);
        for g in FeatureGroup::ALL {
            let rank = c.ranking.iter().position(|r| *r == g).map(|i| i + 1).unwrap_or(0);
            t.push(vec![g.as_str().into(), fmt3(c.full_fit.coefficients[g.index()]), rank.to_string()]);
        }
        written.push(t.write(out, &rel(&["tables", "classifier_coefficients.csv"]))?);
        let mut t = Table::new(&["model_id", "architecture", "probability", "predicted", "correct"]);
        for p in &c.predictions {
            t.push(vec![
                p.model_id.clone(),
                p.architecture.as_str().into(),
                fmt3(p.probability),
                p.predicted.as_str().into(),
                p.correct().to_string(),
            ]);
        }
        t.push(vec![
            "loo_summary".into(),
            String::new(),
            fmt3(c.loo_auc),
            format!("{}/{}", c.loo_correct, c.n),
            fmt3(c.loo_accuracy),
        ]);
        written.push(t.write(out, &rel(&["tables", "classifier_loo.csv"]))?);
    }

    if !(stats.exclusions.is_empty() && stats.subgroups.is_empty() && stats.paired.is_empty()) {
        let mut t = Table::new(&[
            "block", "label", "group", "n_a", "n_b", "mean_a", "mean_b", "delta", "t", "p", "cohens_d",
        ]);
        for (block, items) in [("exclusion", &stats.exclusions), ("subgroup", &stats.subgroups)] {
            for e in items {
                let mut row = vec![block.to_string(), e.label.clone(), group_name(e.result.group)];
                row.extend(ttest_cells(&e.result));
                t.push(row);
            }
        }
        for p in &stats.paired {
            t.push(vec![
                "paired".into(),
                p.label.clone(),
                p.group.as_str().into(),
                p.result.n.to_string(),
                p.result.n.to_string(),
                String::new(),
                String::new(),
                fmt3(p.result.mean_difference),
                fmt3(p.result.t),
                fmt3(p.result.p),
                String::new(),
            ]);
        }
        written.push(t.write(out, &rel(&["tables", "robustness.csv"]))?);
    }

    if !stats.sensitivity.is_empty() {
        let mut t = Table::new(&["group", "excluded", "delta", "delta_shift", "p", "most_influential"]);
        for s in &stats.sensitivity {
            for e in &s.entries {
                t.push(vec![
                    s.group.as_str().into(),
                    e.excluded.clone(),
                    fmt3(e.result.delta),
                    fmt3(e.delta_shift),
                    fmt3(e.result.p),
                    (s.most_influential.as_deref() == Some(e.excluded.as_str())).to_string(),
                ]);
            }
        }
        written.push(t.write(out, &rel(&["tables", "sensitivity.csv"]))?);
    }
    Ok(written)
}
