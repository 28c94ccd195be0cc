use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use layerprint_pipeline::report::NO_COMPARISONS;
use layerprint_pipeline::{run, PipelineError, RunConfig, RunOptions, Stage};

#[derive(Parser)]
#[command(name = "fp", version, about = "Layer-wise fingerprint analysis of speech encoders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check stacks, manifests and label tables listed in the registry.
    Validate(Flags),
    /// Train per-layer probes and write curves.
    Probe(Flags),
    /// Peak metrics, profiles and trajectories from curves.
    Metrics(Flags),
    /// Architecture comparisons over profiles.
    Compare(Flags),
    /// Leave-one-out architecture classifier over profiles.
    Classify(Flags),
    /// Report tables and plot data.
    Report(Flags),
    /// Every stage listed in the config.
    Run(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "boot-n")]
    boot_n: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated target or group names.
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<String>>,
    /// Profile table to use instead of metrics output.
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Curve file or directory to use instead of probe output.
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Model table (model_id,architecture,param_count).
    #[arg(long)]
    models: Option<PathBuf>,
    /// Ignore the ledger and recompute every stage.
    #[arg(long)]
    fresh: bool,
}

fn build_config(flags: &Flags, stage: Option<Stage>) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &flags.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(stage) = stage {
        cfg.stages = vec![stage];
    }
    if flags.seed.is_some() {
        cfg.seed = flags.seed;
    }
    if flags.boot_n.is_some() {
        cfg.bootstrap_resamples = flags.boot_n;
    }
    if let Some(out) = &flags.out {
        cfg.out_dir = out.clone();
    }
    if flags.targets.is_some() {
        cfg.targets = flags.targets.clone();
    }
    for (slot, flag) in [
        (&mut cfg.profiles, &flags.profiles),
        (&mut cfg.registry, &flags.registry),
        (&mut cfg.curves, &flags.curves),
        (&mut cfg.models, &flags.models),
    ] {
        if flag.is_some() {
            *slot = flag.clone();
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("FP_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let (flags, stage) = match &cli.command {
        Command::Validate(f) => (f, Some(Stage::Validate)),
        Command::Probe(f) => (f, Some(Stage::Probe)),
        Command::Metrics(f) => (f, Some(Stage::Metrics)),
        Command::Compare(f) => (f, Some(Stage::Compare)),
        Command::Classify(f) => (f, Some(Stage::Classify)),
        Command::Report(f) => (f, Some(Stage::Report)),
        Command::Run(f) => (f, None),
    };
    let result = build_config(flags, stage)
        .and_then(|cfg| run(&cfg, &RunOptions { fresh: flags.fresh }).map(|l| (cfg, l)));
    match result {
        Ok((cfg, ledger)) => {
            for r in &ledger.stages {
                if !cfg.stages.contains(&r.stage) {
                    continue;
                }
                let state = if r.reused { "reused" } else { "done" };
                println!(
                    "{:<9} {state:<7} {} output(s), {} skipped",
                    r.stage,
                    r.outputs.len(),
                    r.skipped.len()
                );
            }
            let report = cfg.out_dir.join("report/report.json");
            if cfg.stages.contains(&Stage::Report)
                && std::fs::read_to_string(report).is_ok_and(|t| t.contains(NO_COMPARISONS))
            {
                eprintln!("warning: {NO_COMPARISONS}");
            }
            println!("outputs in {}", cfg.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
