//! Benchmark fixtures shared by the criterion targets.

use std::fs::File;
use std::path::Path;

use layerprint_core::metrics::read_profiles;
use layerprint_core::synthetic::{planted_model, PlantedConfig, PlantedModel};
use layerprint_core::FingerprintProfile;

pub fn reference_profiles() -> Vec<FingerprintProfile> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/reference_profiles.csv");
    read_profiles(File::open(path).expect("reference profiles")).expect("profile table")
}

pub fn small_model(seed: u64) -> PlantedModel {
    let cfg = PlantedConfig { utterances: 120, frames_per_utterance: 10, seed, ..Default::default() };
    planted_model(&cfg, "bench")
}
