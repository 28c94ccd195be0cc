use layerprint_core::metrics::peak_position;
use layerprint_core::probe::{make_splits, probe_curve, CurveOptions};
use layerprint_core::repr::builtin_targets;
use layerprint_core::synthetic::{planted_model, PlantedConfig};
use layerprint_core::{aggregate_profile, FeatureGroup, SplitPolicy};

#[test]
fn acoustic_and_phoneme_curves_peak_at_planted_layer() {
    let cfg = PlantedConfig { peak_layer: 4, seed: 11, ..Default::default() };
    let model = planted_model(&cfg, "planted");
    let split = make_splits(&model.labels, SplitPolicy::SpeakerDisjoint, 7).unwrap();
    let targets: Vec<_> = builtin_targets()
        .into_iter()
        .filter(|t| matches!(t.group, FeatureGroup::Acoustic | FeatureGroup::Phoneme))
        .collect();
    let curves: Vec<_> = targets
        .iter()
        .map(|t| {
            probe_curve(&model.stack, &model.manifest, &model.labels, t, &split, 3, &CurveOptions::default())
                .unwrap()
        })
        .collect();
    for c in &curves {
        assert_eq!(peak_position(c), 4.0 / 12.0, "{}", c.target);
    }
    let profile = aggregate_profile("planted", model.manifest.architecture, 1, &curves, &targets);
    assert!((profile.position(FeatureGroup::Acoustic).unwrap() - 4.0 / 12.0).abs() < 1e-12);
    assert_eq!(profile.position(FeatureGroup::Gender), None);
}
