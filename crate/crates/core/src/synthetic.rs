//! Planted-structure bundles for tests and benchmarks: a set of targets is a
//! noisy linear readout of one chosen layer, every other layer is pure noise.

use ndarray::{Array2, Array3};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::repr::{Gender, L1Accent, LabelRow, LabelTable, ModelManifest, TensorStack, NUM_ACOUSTIC};
use crate::rng::stream_rng;
use crate::types::Architecture;

#[derive(Debug, Clone)]
pub struct PlantedConfig {
    pub num_blocks: usize,
    pub hidden: usize,
    pub utterances: usize,
    pub frames_per_utterance: usize,
    pub speakers: usize,
    /// Layer index (0..=num_blocks) carrying the signal.
    pub peak_layer: usize,
    /// Noise standard deviation relative to a unit-variance signal.
    pub noise: f64,
    pub phoneme_classes: usize,
    pub frame_rate_hz: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        Self {
            num_blocks: 12,
            hidden: 32,
            utterances: 200,
            frames_per_utterance: 20,
            speakers: 20,
            peak_layer: 6,
            noise: 0.3,
            phoneme_classes: 8,
            frame_rate_hz: 50.0,
            seed: 0,
        }
    }
}

pub struct PlantedModel {
    pub stack: TensorStack,
    pub manifest: ModelManifest,
    pub labels: LabelTable,
}

fn unit_directions<R: Rng>(rng: &mut R, count: usize, dim: usize) -> Array2<f64> {
    let mut w = Array2::from_shape_fn((count, dim), |_| rng.sample::<f64, _>(StandardNormal));
    for mut row in w.rows_mut() {
        let norm = row.dot(&row).sqrt();
        row /= norm;
    }
    w
}

/// Acoustic targets are utterance-level readouts and phonemes are frame-level
/// argmax readouts of the peak layer. Gender and accent are fixed per speaker
/// and carry no signal. Durations are left unlabelled.
pub fn planted_model(cfg: &PlantedConfig, model_id: &str) -> PlantedModel {
    assert!(cfg.peak_layer <= cfg.num_blocks, "peak layer out of range");
    assert!(cfg.phoneme_classes >= 2 && cfg.speakers >= 3);
    let frames = cfg.utterances * cfg.frames_per_utterance;
    let layers = cfg.num_blocks + 1;
    let mut noise_rng = stream_rng(cfg.seed, 0);
    let data =
        Array3::from_shape_fn((layers, frames, cfg.hidden), |_| noise_rng.sample::<f32, _>(StandardNormal));

    let mut rng = stream_rng(cfg.seed, 1);
    let acoustic_dirs = unit_directions(&mut rng, NUM_ACOUSTIC, cfg.hidden);
    let phoneme_dirs = unit_directions(&mut rng, cfg.phoneme_classes, cfg.hidden);
    let signal = data.index_axis(ndarray::Axis(0), cfg.peak_layer).mapv(f64::from);

    let speaker_gender: Vec<Gender> =
        (0..cfg.speakers).map(|_| if rng.random_bool(0.5) { Gender::F } else { Gender::M }).collect();
    let speaker_accent: Vec<L1Accent> =
        (0..cfg.speakers).map(|_| L1Accent::ALL[rng.random_range(0..L1Accent::ALL.len())]).collect();

    let scale = (cfg.frames_per_utterance as f64).sqrt();
    let mut rows = Vec::with_capacity(frames);
    for u in 0..cfg.utterances {
        let speaker = u % cfg.speakers;
        let span = u * cfg.frames_per_utterance..(u + 1) * cfg.frames_per_utterance;
        let mean = signal
            .slice(ndarray::s![span.clone(), ..])
            .mean_axis(ndarray::Axis(0))
            .expect("non-empty utterance");
        let mut acoustic = [None; NUM_ACOUSTIC];
        for (k, slot) in acoustic.iter_mut().enumerate() {
            let clean = scale * acoustic_dirs.row(k).dot(&mean);
            *slot = Some(clean + cfg.noise * rng.sample::<f64, _>(StandardNormal));
        }
        for f in span {
            let logits = phoneme_dirs.dot(&signal.row(f));
            let phoneme = logits
                .iter()
                .map(|v| v + cfg.noise * rng.sample::<f64, _>(StandardNormal))
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .map(|(i, _)| i as u16);
            let mut row = LabelRow::new(format!("utt{u:04}"), f);
            row.speaker_id = Some(format!("spk{speaker:02}"));
            row.gender = Some(speaker_gender[speaker]);
            row.accent_l1 = Some(speaker_accent[speaker]);
            row.phoneme = phoneme;
            row.acoustic = acoustic;
            rows.push(row);
        }
    }

    PlantedModel {
        stack: TensorStack::new(data, cfg.frame_rate_hz).expect("generated stack is valid"),
        manifest: ModelManifest {
            model_id: model_id.to_string(),
            architecture: Architecture::Transformer,
            param_count: (layers * cfg.hidden * cfg.hidden) as u64,
            num_blocks: cfg.num_blocks,
            dataset_id: "synthetic".to_string(),
            frame_rate_hz: cfg.frame_rate_hz,
        },
        labels: LabelTable { rows },
    }
}
