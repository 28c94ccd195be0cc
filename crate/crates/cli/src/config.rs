use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use layerprint_core::probe::{CurveOptions, Solver, TrainConfig};
use layerprint_core::repr::builtin_targets;
use layerprint_core::stats::ClassifierOptions;
use layerprint_core::{Architecture, ProbeTargetSpec, SplitPolicy};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Validate,
    Probe,
    Metrics,
    Compare,
    Classify,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 6] =
        [Stage::Validate, Stage::Probe, Stage::Metrics, Stage::Compare, Stage::Classify, Stage::Report];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Probe => "probe",
            Stage::Metrics => "metrics",
            Stage::Compare => "compare",
            Stage::Classify => "classify",
            Stage::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown stage `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    #[serde(default = "default_policy")]
    pub default: SplitPolicy,
    /// Per-dataset overrides keyed by dataset id.
    #[serde(default)]
    pub datasets: BTreeMap<String, SplitPolicy>,
}

fn default_policy() -> SplitPolicy {
    SplitPolicy::SpeakerDisjoint
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { default: default_policy(), datasets: BTreeMap::new() }
    }
}

impl SplitConfig {
    pub fn policy(&self, dataset_id: &str) -> SplitPolicy {
        self.datasets.get(dataset_id).copied().unwrap_or(self.default)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    pub solver: Solver,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub ridge: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            solver: Solver::default(),
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            max_epochs: t.max_epochs,
            patience: t.patience,
            ridge: t.ridge,
        }
    }
}

impl ProbeConfig {
    pub fn curve_options(&self) -> CurveOptions {
        CurveOptions {
            solver: self.solver,
            train: TrainConfig {
                learning_rate: self.learning_rate,
                batch_size: self.batch_size,
                max_epochs: self.max_epochs,
                patience: self.patience,
                ridge: self.ridge,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub bandwidth: f64,
    pub level: f64,
    pub grid_points: usize,
    /// Min-max normalize each feature group's scores before smoothing.
    pub normalize: bool,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self { bandwidth: 0.3, level: 0.95, grid_points: 101, normalize: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub inverse_regularization: f64,
    pub threshold: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        let o = ClassifierOptions::default();
        Self { inverse_regularization: o.inverse_regularization, threshold: o.threshold }
    }
}

impl ClassifierConfig {
    pub fn options(&self) -> ClassifierOptions {
        ClassifierOptions { inverse_regularization: self.inverse_regularization, threshold: self.threshold }
    }
}

/// Models whose id contains `contains`, against the rest of `architecture`
/// (or of all models when unset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgroupConfig {
    pub label: String,
    pub contains: String,
    pub architecture: Option<Architecture>,
}

/// Paired comparison over `(first, second)` model ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairedConfig {
    pub label: String,
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RobustnessConfig {
    /// Models dropped for an extra set of architecture t-tests.
    pub exclude: Vec<String>,
    /// Leave-one-model-out sensitivity for every group.
    pub sensitivity: bool,
    pub subgroups: Vec<SubgroupConfig>,
    pub paired: Vec<PairedConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub registry: Option<PathBuf>,
    #[serde(default = "all_stages")]
    pub stages: Vec<Stage>,
    pub seed: Option<u64>,
    pub bootstrap_resamples: Option<usize>,
    /// Bonferroni family size; defaults to the number of groups compared.
    pub bonferroni_family: Option<usize>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Target names or group names to probe and aggregate.
    pub targets: Option<Vec<String>>,
    /// Profile table used by compare, classify and report instead of metrics output.
    pub profiles: Option<PathBuf>,
    /// Curve file or directory of curve files used by metrics instead of probe output.
    pub curves: Option<PathBuf>,
    /// Model table (`model_id,architecture,param_count`) for metrics without a registry.
    pub models: Option<PathBuf>,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub trajectory: TrajectoryConfig,
    #[serde(default)]
    pub classifier: ClassifierConfig,
    #[serde(default)]
    pub robustness: RobustnessConfig,
}

fn all_stages() -> Vec<Stage> {
    Stage::ALL.to_vec()
}

fn default_out() -> PathBuf {
    PathBuf::from("fp_out")
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            registry: None,
            stages: all_stages(),
            seed: None,
            bootstrap_resamples: None,
            bonferroni_family: None,
            out_dir: default_out(),
            targets: None,
            profiles: None,
            curves: None,
            models: None,
            split: SplitConfig::default(),
            probe: ProbeConfig::default(),
            trajectory: TrajectoryConfig::default(),
            classifier: ClassifierConfig::default(),
            robustness: RobustnessConfig::default(),
        }
    }
}

fn rebase(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Parses TOML; relative paths are taken from `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        for p in [&mut cfg.registry, &mut cfg.profiles, &mut cfg.curves, &mut cfg.models] {
            rebase(base_dir, p);
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base_dir.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Stages must appear in canonical order without repeats; gaps are allowed
    /// and the missing upstream outputs are then read from disk.
    pub fn check(&self) -> Result<(), PipelineError> {
        if self.stages.is_empty() {
            return Err(PipelineError::Config("no stages selected".into()));
        }
        if self.stages.windows(2).any(|w| w[0] >= w[1]) {
            let names: Vec<&str> = self.stages.iter().map(|s| s.as_str()).collect();
            return Err(PipelineError::Config(format!(
                "stages [{}] are not in the order validate, probe, metrics, compare, classify, report",
                names.join(", ")
            )));
        }
        let needs_seed =
            self.stages.iter().any(|s| matches!(s, Stage::Probe | Stage::Metrics | Stage::Compare));
        if needs_seed && self.seed.is_none() {
            return Err(PipelineError::Config("`seed` must be set explicitly".into()));
        }
        let needs_resamples = self.stages.iter().any(|s| matches!(s, Stage::Metrics | Stage::Compare));
        if needs_resamples && self.bootstrap_resamples.is_none() {
            return Err(PipelineError::Config("`bootstrap_resamples` must be set explicitly".into()));
        }
        if self.bootstrap_resamples == Some(0) {
            return Err(PipelineError::Config("`bootstrap_resamples` must be positive".into()));
        }
        self.selected_targets()?;
        Ok(())
    }

    /// Built-in targets kept by the `targets` filter.
    pub fn selected_targets(&self) -> Result<Vec<ProbeTargetSpec>, PipelineError> {
        let all = builtin_targets();
        let Some(filter) = &self.targets else {
            return Ok(all);
        };
        for name in filter {
            let known = all
                .iter()
                .any(|t| t.name.eq_ignore_ascii_case(name) || t.group.as_str().eq_ignore_ascii_case(name));
            if !known {
                return Err(PipelineError::Config(format!("unknown target `{name}`")));
            }
        }
        Ok(all
            .into_iter()
            .filter(|t| {
                filter
                    .iter()
                    .any(|f| t.name.eq_ignore_ascii_case(f) || t.group.as_str().eq_ignore_ascii_case(f))
            })
            .collect())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("checked before running")
    }

    pub fn resamples(&self) -> usize {
        self.bootstrap_resamples.expect("checked before running")
    }
}
