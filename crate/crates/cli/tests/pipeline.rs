use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use layerprint_core::probe::write_curves;
use layerprint_core::repr::write_stack;
use layerprint_core::synthetic::{planted_model, PlantedConfig};
use layerprint_core::LayerCurve;
use layerprint_pipeline::ledger::LEDGER_FILE;
use layerprint_pipeline::report::NO_COMPARISONS;
use layerprint_pipeline::stages::{load_profiles, COMPARE_FILE, PROFILES_FILE};
use layerprint_pipeline::{run, PipelineError, RunConfig, RunLedger, RunOptions, Stage};

fn reference_profiles() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/reference_profiles.csv")
}

fn stats_config(out: &Path, stages: Vec<Stage>) -> RunConfig {
    RunConfig {
        stages,
        seed: Some(5),
        bootstrap_resamples: Some(500),
        out_dir: out.to_path_buf(),
        profiles: Some(reference_profiles()),
        ..Default::default()
    }
}

fn report_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.join("report")];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

const ALL_STATS: [Stage; 3] = [Stage::Compare, Stage::Classify, Stage::Report];

#[test]
fn reports_are_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&stats_config(a.path(), ALL_STATS.to_vec()), &RunOptions::default()).unwrap();
    run(&stats_config(b.path(), ALL_STATS.to_vec()), &RunOptions::default()).unwrap();
    let (fa, fb) = (report_files(a.path()), report_files(b.path()));
    assert!(fa.iter().any(|(n, _)| n.ends_with("ttests.csv")));
    assert!(fa.iter().any(|(n, _)| n.ends_with("classifier_loo.csv")));
    assert_eq!(fa, fb);
}

#[test]
fn group_peak_table_matches_reference_means() {
    let dir = tempfile::tempdir().unwrap();
    run(&stats_config(dir.path(), vec![Stage::Report]), &RunOptions::default()).unwrap();
    let text = fs::read_to_string(dir.path().join("report/plots/group_peaks.csv")).unwrap();
    assert!(text.contains("gender,Conformer,7,0.156,"), "{text}");
    assert!(text.contains("gender,Transformer,17,0.282,"), "{text}");
}

#[test]
fn report_without_stats_carries_marker() {
    let dir = tempfile::tempdir().unwrap();
    run(&stats_config(dir.path(), vec![Stage::Report]), &RunOptions::default()).unwrap();
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report/report.json")).unwrap()).unwrap();
    assert_eq!(doc["comparisons_run"], false);
    assert_eq!(doc["marker"], NO_COMPARISONS);
    assert!(!dir.path().join("report/tables/ttests.csv").exists());
}

#[test]
fn rerun_reuses_unchanged_stages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stats_config(dir.path(), ALL_STATS.to_vec());
    let first = run(&cfg, &RunOptions::default()).unwrap();
    assert!(first.stages.iter().all(|r| !r.reused));
    assert!(first.outputs_unique());
    let second = run(&cfg, &RunOptions::default()).unwrap();
    assert!(second.stages.iter().all(|r| r.reused));
    let fresh = run(&cfg, &RunOptions { fresh: true }).unwrap();
    assert!(fresh.stages.iter().all(|r| !r.reused));

    let mut changed = cfg.clone();
    changed.seed = Some(6);
    let third = run(&changed, &RunOptions::default()).unwrap();
    assert!(!third.record(Stage::Compare).unwrap().reused);
    assert!(RunLedger::load(dir.path()).unwrap().is_some());
}

#[test]
fn missing_upstream_is_a_dependency_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        stages: vec![Stage::Compare],
        seed: Some(1),
        bootstrap_resamples: Some(10),
        out_dir: dir.path().into(),
        ..Default::default()
    };
    let err = run(&cfg, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::StageDependency(_)), "{err}");
    assert_eq!(err.exit_code(), 3);
}

#[test]
fn stages_out_of_order_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = stats_config(dir.path(), vec![Stage::Report, Stage::Compare]);
    assert!(run(&cfg, &RunOptions::default()).is_err());
}

#[test]
fn compare_is_independent_of_thread_count() {
    let compare = |threads: usize| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = stats_config(dir.path(), vec![Stage::Compare]);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run(&cfg, &RunOptions::default())).unwrap();
        fs::read(dir.path().join(COMPARE_FILE)).unwrap()
    };
    assert_eq!(compare(1), compare(4));
}

fn peaked(model: &str, target: &str, peak: usize) -> LayerCurve {
    let scores = (0..13).map(|l| 0.8 - 0.05 * (l as f64 - peak as f64).abs()).collect();
    LayerCurve::new(model, "ds", target, scores)
}

#[test]
fn metrics_from_curve_file_and_model_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut curves = Vec::new();
    let mut table = String::from("model_id,architecture,param_count\n");
    for (i, (arch, peak)) in [
        ("conformer", 2),
        ("conformer", 3),
        ("conformer", 4),
        ("transformer", 8),
        ("transformer", 9),
        ("transformer", 10),
    ]
    .into_iter()
    .enumerate()
    {
        let id = format!("m{i}");
        table.push_str(&format!("{id},{arch},{}\n", 100_000_000 * (i + 1)));
        for target in ["f0_mean", "gender", "accent", "phoneme", "duration"] {
            curves.push(peaked(&id, target, peak));
        }
    }
    let curve_path = dir.path().join("curves.csv");
    write_curves(&curves, fs::File::create(&curve_path).unwrap()).unwrap();
    fs::write(dir.path().join("models.csv"), table).unwrap();

    let out = dir.path().join("out");
    let cfg = RunConfig {
        stages: vec![Stage::Metrics, Stage::Compare, Stage::Report],
        seed: Some(3),
        bootstrap_resamples: Some(200),
        out_dir: out.clone(),
        curves: Some(curve_path),
        models: Some(dir.path().join("models.csv")),
        ..Default::default()
    };
    let ledger = run(&cfg, &RunOptions::default()).unwrap();
    assert!(ledger.outputs_unique());

    let profiles = load_profiles(&out.join(PROFILES_FILE)).unwrap();
    assert_eq!(profiles.len(), 6);
    let m0 = profiles.iter().find(|p| p.model_id == "m0").unwrap();
    assert!((m0.positions[1].unwrap() - 2.0 / 12.0).abs() < 1e-12);
    assert_eq!(m0.param_count, 100_000_000);

    for group in ["acoustic", "gender", "accent", "phoneme", "duration"] {
        let path = out.join(format!("report/plots/trajectory_{group}.csv"));
        assert!(path.exists(), "{}", path.display());
    }
    let ttests = fs::read_to_string(out.join("report/tables/ttests.csv")).unwrap();
    assert_eq!(ttests.lines().count(), 6);
}

#[test]
fn failed_validation_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_small = PlantedConfig {
        utterances: 30,
        frames_per_utterance: 4,
        num_blocks: 3,
        peak_layer: 2,
        ..Default::default()
    };
    let model = planted_model(&cfg_small, "broken");
    let stack = dir.path().join("broken.repr");
    write_stack(&model.stack, &model.manifest, &stack).unwrap();
    let bytes = fs::read(&stack).unwrap();
    fs::write(&stack, &bytes[..bytes.len() - 8]).unwrap();
    model.labels.write_csv(dir.path().join("labels.csv")).unwrap();
    fs::write(
        dir.path().join("registry.toml"),
        "[[bundle]]\nstack = \"broken.repr\"\nlabels = \"labels.csv\"\n",
    )
    .unwrap();

    let out = dir.path().join("out");
    let cfg = RunConfig {
        registry: Some(dir.path().join("registry.toml")),
        stages: vec![Stage::Validate, Stage::Probe],
        seed: Some(1),
        bootstrap_resamples: Some(10),
        out_dir: out.clone(),
        ..Default::default()
    };
    let err = run(&cfg, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::Validation(1)), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(out.join(LEDGER_FILE).exists());
    assert!(!out.join("curves.csv").exists());
}

fn fp(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_fp")).args(args).output().unwrap()
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let missing = fp(&["compare", "--seed", "1", "--boot-n", "10", "--out", out]);
    assert_eq!(missing.status.code(), Some(3));

    let profiles = reference_profiles();
    let ok = fp(&[
        "compare",
        "--profiles",
        profiles.to_str().unwrap(),
        "--seed",
        "1",
        "--boot-n",
        "100",
        "--out",
        out,
    ]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join(COMPARE_FILE).exists());

    let no_seed = fp(&["compare", "--profiles", profiles.to_str().unwrap(), "--out", out]);
    assert!(!no_seed.status.success());
}

#[test]
fn example_config_runs() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.toml");
    let mut cfg = RunConfig::load(&path).unwrap();
    let dir = tempfile::tempdir().unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    cfg.bootstrap_resamples = Some(200);
    run(&cfg, &RunOptions::default()).unwrap();
    let table = fs::read_to_string(dir.path().join("report/tables/robustness.csv")).unwrap();
    assert!(table.contains("subgroup,whisper,gender"));
    assert!(table.contains("paired,multilingual - english,gender"));
    assert!(dir.path().join("report/tables/sensitivity.csv").exists());
}
