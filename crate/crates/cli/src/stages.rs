use std::collections::BTreeMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use layerprint_core::metrics::{
    compute_metrics, lowess_trajectory, minmax_normalize, read_profiles, write_profiles, write_strengths,
    LowessOptions,
};
use layerprint_core::probe::{make_splits, probe_curve, read_curves, write_curves, ProbeError};
use layerprint_core::repr::{read_stack, validate_bundle, LabelTable, ValidationReport};
use layerprint_core::rng::{derive_seed, label_key};
use layerprint_core::stats::{
    architecture_values, bonferroni, bootstrap_mean_diff_ci, compare_architectures, group_means, loo_auc,
    ols_arch_size, paired_t, sensitivity_loo_models, subgroup_compare, LabelledPaired, LabelledTTest,
    StatReport,
};
use layerprint_core::{
    aggregate_profile, Architecture, FeatureGroup, FingerprintProfile, LayerCurve, Trajectory,
};
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Stage};
use crate::error::PipelineError;
use crate::ledger::SkippedTarget;
use crate::registry::{load_registry, Bundle};
use crate::report::emit_report;

pub const VALIDATION_FILE: &str = "validation.json";
pub const CURVES_FILE: &str = "curves.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PROFILES_FILE: &str = "profiles.csv";
pub const STRENGTHS_FILE: &str = "strengths.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const COMPARE_FILE: &str = "compare.json";
pub const CLASSIFIER_FILE: &str = "classifier.json";

/// What a stage wrote, relative to the output directory.
#[derive(Debug, Default)]
pub struct StageOutcome {
    pub outputs: Vec<PathBuf>,
    pub skipped: Vec<SkippedTarget>,
    pub validation_failures: usize,
}

fn write_file(out: &Path, rel: &str, bytes: &[u8]) -> Result<PathBuf, PipelineError> {
    let path = out.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
    }
    fs::write(&path, bytes).map_err(|e| PipelineError::io(&path, e))?;
    Ok(PathBuf::from(rel))
}

pub(crate) fn write_json<T: Serialize>(out: &Path, rel: &str, value: &T) -> Result<PathBuf, PipelineError> {
    let text = serde_json::to_string_pretty(value).expect("report types serialize") + "\n";
    write_file(out, rel, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::module(path.display().to_string(), e))
}

fn skip(model: &str, dataset: &str, target: impl Into<String>, reason: impl ToString) -> SkippedTarget {
    SkippedTarget {
        model_id: model.into(),
        dataset_id: dataset.into(),
        target: target.into(),
        reason: reason.to_string(),
    }
}

fn require(path: PathBuf, stage: Stage, what: &str) -> Result<PathBuf, PipelineError> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::StageDependency(format!("{stage} needs {what} at {}", path.display())))
    }
}

fn registry_bundles(cfg: &RunConfig, stage: Stage) -> Result<Vec<Bundle>, PipelineError> {
    let Some(reg) = &cfg.registry else {
        return Err(PipelineError::StageDependency(format!("{stage} needs a registry")));
    };
    load_registry(&require(reg.clone(), stage, "the registry")?)
}

fn curve_files(cfg: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let source = match &cfg.curves {
        Some(p) => require(p.clone(), Stage::Metrics, "curves")?,
        None => require(cfg.out_dir.join(CURVES_FILE), Stage::Metrics, "probe output")?,
    };
    if !source.is_dir() {
        return Ok(vec![source]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(&source)
        .map_err(|e| PipelineError::io(&source, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(PipelineError::StageDependency(format!("no curve files in {}", source.display())));
    }
    Ok(files)
}

fn profiles_path(cfg: &RunConfig, stage: Stage) -> Result<PathBuf, PipelineError> {
    match &cfg.profiles {
        Some(p) => require(p.clone(), stage, "profiles"),
        None => require(cfg.out_dir.join(PROFILES_FILE), stage, "metrics output"),
    }
}

/// Files a stage reads, in a stable order. Missing upstream artifacts are a
/// dependency error.
pub fn stage_inputs(stage: Stage, cfg: &RunConfig) -> Result<Vec<PathBuf>, PipelineError> {
    match stage {
        Stage::Validate | Stage::Probe => {
            let mut files = vec![cfg.registry.clone().unwrap_or_default()];
            for b in registry_bundles(cfg, stage)? {
                files.push(require(b.stack, stage, "a stack")?);
                files.push(require(b.manifest, stage, "a manifest")?);
                files.push(require(b.labels, stage, "a label table")?);
            }
            Ok(files)
        }
        Stage::Metrics => {
            let mut files = curve_files(cfg)?;
            match &cfg.models {
                Some(m) => files.push(require(m.clone(), stage, "the model table")?),
                None => {
                    let reg = cfg.registry.clone().ok_or_else(|| {
                        PipelineError::StageDependency(
                            "metrics needs a model table or a registry for architecture and size".into(),
                        )
                    })?;
                    files.push(reg);
                    for b in registry_bundles(cfg, stage)? {
                        files.push(require(b.manifest, stage, "a manifest")?);
                    }
                }
            }
            Ok(files)
        }
        Stage::Compare | Stage::Classify => Ok(vec![profiles_path(cfg, stage)?]),
        Stage::Report => {
            let mut files = vec![profiles_path(cfg, stage)?];
            for rel in [COMPARE_FILE, CLASSIFIER_FILE, TRAJECTORIES_FILE] {
                let p = cfg.out_dir.join(rel);
                if p.exists() {
                    files.push(p);
                }
            }
            Ok(files)
        }
    }
}

/// Stage settings that feed the resume digest.
pub fn stage_settings(stage: Stage, cfg: &RunConfig) -> serde_json::Value {
    use serde_json::json;
    match stage {
        Stage::Validate => json!({}),
        Stage::Probe => json!({
            "seed": cfg.seed, "split": cfg.split, "probe": cfg.probe, "targets": cfg.targets,
        }),
        Stage::Metrics => json!({
            "seed": cfg.seed, "resamples": cfg.bootstrap_resamples,
            "trajectory": cfg.trajectory, "targets": cfg.targets,
        }),
        Stage::Compare => json!({
            "seed": cfg.seed, "resamples": cfg.bootstrap_resamples,
            "family": cfg.bonferroni_family, "robustness": cfg.robustness,
        }),
        Stage::Classify => json!({ "classifier": cfg.classifier }),
        Stage::Report => json!({ "seed": cfg.seed, "resamples": cfg.bootstrap_resamples }),
    }
}

pub fn execute(stage: Stage, cfg: &RunConfig) -> Result<StageOutcome, PipelineError> {
    match stage {
        Stage::Validate => validate(cfg),
        Stage::Probe => probe(cfg),
        Stage::Metrics => metrics(cfg),
        Stage::Compare => compare(cfg),
        Stage::Classify => classify(cfg),
        Stage::Report => report(cfg),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleValidation {
    pub model_id: String,
    pub dataset_id: String,
    pub stack: String,
    pub report: ValidationReport,
}

fn load_bundle(
    b: &Bundle,
) -> Result<(layerprint_core::TensorStack, layerprint_core::ModelManifest, LabelTable), PipelineError> {
    let (stack, manifest) =
        read_stack(&b.stack).map_err(|e| PipelineError::module(b.stack.display().to_string(), e))?;
    let labels = LabelTable::read_csv(&b.labels)
        .map_err(|e| PipelineError::module(b.labels.display().to_string(), e))?;
    Ok((stack, manifest, labels))
}

fn validate(cfg: &RunConfig) -> Result<StageOutcome, PipelineError> {
    let mut results = Vec::new();
    for b in registry_bundles(cfg, Stage::Validate)? {
        let entry = match load_bundle(&b) {
            Ok((stack, manifest, labels)) => BundleValidation {
                model_id: manifest.model_id.clone(),
                dataset_id: manifest.dataset_id.clone(),
                stack: b.stack.display().to_string(),
                report: validate_bundle(&stack, &manifest, &labels),
            },
            Err(e) => BundleValidation {
                model_id: String::new(),
                dataset_id: String::new(),
                stack: b.stack.display().to_string(),
                report: ValidationReport { violations: vec![e.to_string()], warnings: vec![] },
            },
        };
        results.push(entry);
    }
    results
        .sort_by(|a, b| (&a.model_id, &a.dataset_id, &a.stack).cmp(&(&b.model_id, &b.dataset_id, &b.stack)));
    let failures = count_validation_failures(&results);
    Ok(StageOutcome {
        outputs: vec![write_json(&cfg.out_dir, VALIDATION_FILE, &results)?],
        skipped: vec![],
        validation_failures: failures,
    })
}

pub fn count_validation_failures(results: &[BundleValidation]) -> usize {
    results.iter().filter(|r| !r.report.is_usable()).count()
}

pub fn read_validation(path: &Path) -> Result<Vec<BundleValidation>, PipelineError> {
    read_json(path)
}

fn probe(cfg: &RunConfig) -> Result<StageOutcome, PipelineError> {
    let targets = cfg.selected_targets()?;
    let options = cfg.probe.curve_options();
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    for b in registry_bundles(cfg, Stage::Probe)? {
        let (stack, manifest, labels) = load_bundle(&b)?;
        let (model, dataset) = (manifest.model_id.as_str(), manifest.dataset_id.as_str());
        let split_seed = derive_seed(cfg.seed(), &[label_key(dataset)]);
        let split = make_splits(&labels, cfg.split.policy(dataset), split_seed)
            .map_err(|e| PipelineError::module(format!("{model}/{dataset}"), e))?;
        for target in &targets {
            match probe_curve(&stack, &manifest, &labels, target, &split, cfg.seed(), &options) {
                Ok(c) => curves.push(c),
                Err(ProbeError::SkippedTarget(_)) => {
                    skipped.push(skip(model, dataset, &target.name, "no labelled rows"))
                }
                Err(e @ ProbeError::DegenerateTarget(_)) => {
                    skipped.push(skip(model, dataset, &target.name, e))
                }
                Err(e) => return Err(PipelineError::module(format!("{model}/{dataset}/{}", target.name), e)),
            }
        }
    }
    curves.sort_by(|a, b| {
        (&a.model_id, &a.dataset_id, &a.target).cmp(&(&b.model_id, &b.dataset_id, &b.target))
    });
    let mut buf = Vec::new();
    write_curves(&curves, &mut buf).map_err(|e| PipelineError::module("curves", e))?;
    Ok(StageOutcome {
        outputs: vec![write_file(&cfg.out_dir, CURVES_FILE, &buf)?],
        skipped,
        validation_failures: 0,
    })
}

#[derive(Debug, Deserialize)]
struct ModelRow {
    model_id: String,
    architecture: String,
    param_count: String,
}

fn model_table(cfg: &RunConfig) -> Result<BTreeMap<String, (Architecture, u64)>, PipelineError> {
    let mut out = BTreeMap::new();
    if let Some(path) = &cfg.models {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| PipelineError::module(path.display().to_string(), e))?;
        for row in rdr.deserialize::<ModelRow>() {
            let row = row.map_err(|e| PipelineError::module(path.display().to_string(), e))?;
            let arch: Architecture =
                row.architecture.parse().map_err(|e: String| PipelineError::module(&row.model_id, e))?;
            let count: f64 = row.param_count.parse().map_err(|_| {
                PipelineError::module(&row.model_id, format!("bad param_count `{}`", row.param_count))
            })?;
            out.insert(row.model_id, (arch, count.round() as u64));
        }
    } else {
        for b in registry_bundles(cfg, Stage::Metrics)? {
            let m = b.load_manifest()?;
            out.insert(m.model_id, (m.architecture, m.param_count));
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct MetricsRow<'a> {
    model_id: &'a str,
    dataset_id: &'a str,
    target: &'a str,
    group: &'a str,
    peak_position: f64,
    peak_strength: f64,
    peak_width: f64,
    entropy: Option<f64>,
}

/// One smoothed trajectory per (group, architecture).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub group: FeatureGroup,
    pub architecture: Architecture,
    pub depth: f64,
    pub fit: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

pub fn read_trajectories(path: &Path) -> Result<Vec<TrajectoryRow>, PipelineError> {
    let mut rdr =
        csv::Reader::from_path(path).map_err(|e| PipelineError::module(path.display().to_string(), e))?;
    rdr.deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| PipelineError::module(path.display().to_string(), e))
}

fn trajectories(
    cfg: &RunConfig,
    curves: &[LayerCurve],
    group_of: &BTreeMap<String, FeatureGroup>,
    models: &BTreeMap<String, (Architecture, u64)>,
    skipped: &mut Vec<SkippedTarget>,
) -> Vec<TrajectoryRow> {
    let mut rows = Vec::new();
    for group in FeatureGroup::ALL {
        let mut points: Vec<(Architecture, (f64, f64))> = Vec::new();
        for c in curves.iter().filter(|c| group_of.get(&c.target) == Some(&group)) {
            let arch = models[&c.model_id].0;
            for (l, s) in c.scores.iter().enumerate() {
                points.push((arch, (l as f64 / c.num_blocks as f64, *s)));
            }
        }
        if points.is_empty() {
            continue;
        }
        if cfg.trajectory.normalize {
            let raw: Vec<(f64, f64)> = points.iter().map(|p| p.1).collect();
            for (p, n) in points.iter_mut().zip(minmax_normalize(&raw)) {
                p.1 = n;
            }
        }
        for arch in [Architecture::Conformer, Architecture::Transformer] {
            let pts: Vec<(f64, f64)> = points.iter().filter(|p| p.0 == arch).map(|p| p.1).collect();
            if pts.is_empty() {
                continue;
            }
            let options = LowessOptions {
                bandwidth: cfg.trajectory.bandwidth,
                resamples: cfg.resamples(),
                level: cfg.trajectory.level,
                grid_points: cfg.trajectory.grid_points,
                normalize: false,
                seed: derive_seed(
                    cfg.seed(),
                    &[label_key("trajectory"), group.index() as u64, arch.indicator() as u64],
                ),
            };
            match lowess_trajectory(&pts, &options) {
                Ok(Trajectory { depth, fit, ci_low, ci_high }) => {
                    for i in 0..depth.len() {
                        rows.push(TrajectoryRow {
                            group,
                            architecture: arch,
                            depth: depth[i],
                            fit: fit[i],
                            ci_low: ci_low[i],
                            ci_high: ci_high[i],
                        });
                    }
                }
                Err(e) => skipped.push(skip(
                    "*",
                    "*",
                    format!("trajectory:{group}:{}", arch.as_str().to_lowercase()),
                    e,
                )),
            }
        }
    }
    rows
}

fn metrics(cfg: &RunConfig) -> Result<StageOutcome, PipelineError> {
    let targets = cfg.selected_targets()?;
    let group_of: BTreeMap<String, FeatureGroup> =
        targets.iter().map(|t| (t.name.clone(), t.group)).collect();
    let mut curves = Vec::new();
    for path in curve_files(cfg)? {
        let file = File::open(&path).map_err(|e| PipelineError::io(&path, e))?;
        let mut read = read_curves(file).map_err(|e| PipelineError::module(path.display().to_string(), e))?;
        curves.append(&mut read);
    }
    curves.retain(|c| group_of.contains_key(&c.target));
    curves.sort_by(|a, b| {
        (&a.model_id, &a.dataset_id, &a.target).cmp(&(&b.model_id, &b.dataset_id, &b.target))
    });
    let models = model_table(cfg)?;
    if let Some(c) = curves.iter().find(|c| !models.contains_key(&c.model_id)) {
        return Err(PipelineError::StageDependency(format!(
            "no architecture and parameter count for model `{}`",
            c.model_id
        )));
    }

    let mut wtr = csv::Writer::from_writer(Vec::new());
    for c in &curves {
        let m = compute_metrics(c);
        wtr.serialize(MetricsRow {
            model_id: &c.model_id,
            dataset_id: &c.dataset_id,
            target: &c.target,
            group: group_of[&c.target].as_str(),
            peak_position: m.peak_position,
            peak_strength: m.peak_strength,
            peak_width: m.peak_width,
            entropy: m.entropy,
        })
        .map_err(|e| PipelineError::module("metrics", e))?;
    }
    let metrics_bytes = wtr.into_inner().map_err(|e| PipelineError::module("metrics", e.to_string()))?;

    let mut by_model: BTreeMap<&str, Vec<LayerCurve>> = BTreeMap::new();
    for c in &curves {
        by_model.entry(&c.model_id).or_default().push(c.clone());
    }
    let profiles: Vec<FingerprintProfile> = by_model
        .iter()
        .map(|(id, cs)| {
            let (arch, params) = models[*id];
            aggregate_profile(id, arch, params, cs, &targets)
        })
        .collect();
    let mut profile_bytes = Vec::new();
    write_profiles(&profiles, &mut profile_bytes).map_err(|e| PipelineError::module("profiles", e))?;
    let mut strength_bytes = Vec::new();
    write_strengths(&profiles, &mut strength_bytes).map_err(|e| PipelineError::module("strengths", e))?;

    let mut skipped = Vec::new();
    let traj = trajectories(cfg, &curves, &group_of, &models, &mut skipped);
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in &traj {
        wtr.serialize(row).map_err(|e| PipelineError::module("trajectories", e))?;
    }
    let traj_bytes = wtr.into_inner().map_err(|e| PipelineError::module("trajectories", e.to_string()))?;

    let out = &cfg.out_dir;
    Ok(StageOutcome {
        outputs: vec![
            write_file(out, METRICS_FILE, &metrics_bytes)?,
            write_file(out, PROFILES_FILE, &profile_bytes)?,
            write_file(out, STRENGTHS_FILE, &strength_bytes)?,
            write_file(out, TRAJECTORIES_FILE, &traj_bytes)?,
        ],
        skipped,
        validation_failures: 0,
    })
}

pub fn load_profiles(path: &Path) -> Result<Vec<FingerprintProfile>, PipelineError> {
    let file = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    read_profiles(file).map_err(|e| PipelineError::module(path.display().to_string(), e))
}

/// Architecture t-tests, bootstrap intervals, regressions and the configured
/// robustness blocks over a profile set.
pub fn compare_profiles(
    cfg: &RunConfig,
    profiles: &[FingerprintProfile],
    skipped: &mut Vec<SkippedTarget>,
) -> Result<StatReport, PipelineError> {
    let mut report = StatReport { group_means: group_means(profiles), ..Default::default() };
    let seed = cfg.seed();
    for group in FeatureGroup::ALL {
        match compare_architectures(profiles, group) {
            Ok(r) => report.ttests.push(r),
            Err(e) => {
                skipped.push(skip("*", "*", format!("ttest:{group}"), e));
                continue;
            }
        }
        let (conf, trans) = architecture_values(profiles, group);
        let boot_seed = derive_seed(seed, &[label_key("bootstrap"), group.index() as u64]);
        let mut ci = bootstrap_mean_diff_ci(&conf, &trans, cfg.resamples(), 0.95, boot_seed)
            .map_err(|e| PipelineError::module(format!("bootstrap/{group}"), e))?;
        ci.group = Some(group);
        report.bootstrap.push(ci);
        match ols_arch_size(profiles, group) {
            Ok(fit) => report.regressions.push(fit),
            Err(e) => skipped.push(skip("*", "*", format!("regression:{group}"), e)),
        }
        if cfg.robustness.sensitivity {
            report.sensitivity.push(
                sensitivity_loo_models(profiles, group)
                    .map_err(|e| PipelineError::module(format!("sensitivity/{group}"), e))?,
            );
        }
    }
    let family = cfg.bonferroni_family.unwrap_or(report.ttests.len());
    bonferroni(&mut report.ttests, family);

    let rob = &cfg.robustness;
    if !rob.exclude.is_empty() {
        let kept: Vec<FingerprintProfile> =
            profiles.iter().filter(|p| !rob.exclude.contains(&p.model_id)).cloned().collect();
        let label = format!("excluding {}", rob.exclude.join(", "));
        for group in FeatureGroup::ALL {
            if let Ok(result) = compare_architectures(&kept, group) {
                report.exclusions.push(LabelledTTest { label: label.clone(), result });
            }
        }
        let mut excl: Vec<_> = report.exclusions.iter().map(|e| e.result.clone()).collect();
        bonferroni(&mut excl, family);
        for (e, r) in report.exclusions.iter_mut().zip(excl) {
            e.result = r;
        }
    }
    for sub in &rob.subgroups {
        let pool: Vec<FingerprintProfile> = profiles
            .iter()
            .filter(|p| sub.architecture.is_none_or(|a| p.architecture == a))
            .cloned()
            .collect();
        for group in FeatureGroup::ALL {
            match subgroup_compare(&pool, group, |p| p.model_id.contains(&sub.contains)) {
                Ok(result) => report.subgroups.push(LabelledTTest { label: sub.label.clone(), result }),
                Err(e) => skipped.push(skip("*", "*", format!("subgroup:{}:{group}", sub.label), e)),
            }
        }
    }
    let by_id: BTreeMap<&str, &FingerprintProfile> =
        profiles.iter().map(|p| (p.model_id.as_str(), p)).collect();
    for pc in &rob.paired {
        for (a, b) in &pc.pairs {
            for id in [a, b] {
                if !by_id.contains_key(id.as_str()) {
                    return Err(PipelineError::Config(format!(
                        "paired block `{}` names unknown model `{id}`",
                        pc.label
                    )));
                }
            }
        }
        for group in FeatureGroup::ALL {
            let values: Option<Vec<(f64, f64)>> = pc
                .pairs
                .iter()
                .map(|(a, b)| Some((by_id[a.as_str()].position(group)?, by_id[b.as_str()].position(group)?)))
                .collect();
            let Some(values) = values else { continue };
            let (first, second): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
            match paired_t(&first, &second) {
                Ok(result) => report.paired.push(LabelledPaired { label: pc.label.clone(), group, result }),
                Err(e) => skipped.push(skip("*", "*", format!("paired:{}:{group}", pc.label), e)),
            }
        }
    }
    Ok(report)
}

fn compare(cfg: &RunConfig) -> Result<StageOutcome, PipelineError> {
    let profiles = load_profiles(&profiles_path(cfg, Stage::Compare)?)?;
    let mut skipped = Vec::new();
    let report = compare_profiles(cfg, &profiles, &mut skipped)?;
    Ok(StageOutcome {
        outputs: vec![write_json(&cfg.out_dir, COMPARE_FILE, &report)?],
        skipped,
        validation_failures: 0,
    })
}

fn classify(cfg: &RunConfig) -> Result<StageOutcome, PipelineError> {
    let profiles = load_profiles(&profiles_path(cfg, Stage::Classify)?)?;
    let report =
        loo_auc(&profiles, &cfg.classifier.options()).map_err(|e| PipelineError::module("classifier", e))?;
    Ok(StageOutcome {
        outputs: vec![write_json(&cfg.out_dir, CLASSIFIER_FILE, &report)?],
        skipped: vec![],
        validation_failures: 0,
    })
}

fn report(cfg: &RunConfig) -> Result<StageOutcome, PipelineError> {
    let profiles = load_profiles(&profiles_path(cfg, Stage::Report)?)?;
    let out = &cfg.out_dir;
    let compare_path = out.join(COMPARE_FILE);
    let mut stats: Option<StatReport> =
        if compare_path.exists() { Some(read_json(&compare_path)?) } else { None };
    let classifier_path = out.join(CLASSIFIER_FILE);
    if classifier_path.exists() {
        stats.get_or_insert_with(StatReport::default).classifier = Some(read_json(&classifier_path)?);
    }
    let traj_path = out.join(TRAJECTORIES_FILE);
    let trajectories = if traj_path.exists() { read_trajectories(&traj_path)? } else { Vec::new() };
    let outputs =
        emit_report(out, &profiles, stats.as_ref(), &trajectories, cfg.seed, cfg.bootstrap_resamples)?;
    Ok(StageOutcome { outputs, skipped: vec![], validation_failures: 0 })
}
