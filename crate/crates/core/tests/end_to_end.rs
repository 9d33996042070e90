//! Cross-module flows through the public API only: train a classifier on
//! simulated data, push a mixed recording through classify-correct-
//! reconstruct, and score the result.

use eegdenoise::classifier::{classify, train_svm, FeatureVector, SvmModel};
use eegdenoise::metrics::correlation_coefficient;
use eegdenoise::optimizer::{FitnessMode, SwarmConfig};
use eegdenoise::pipeline::{
    denoise_recording, evaluate_run, LevelChoice, PipelineConfig, WaveletChoice,
};
use eegdenoise::signal::segmentize;
use eegdenoise::simulator::{build_dataset, simulate_clean_eeg, simulate_trial, SimulationSpec};
use eegdenoise::{Label, Recording};

fn trained_model(seed: u64) -> SvmModel {
    let base = SimulationSpec {
        seed,
        ..SimulationSpec::default()
    };
    let items = build_dataset(&base, 20).unwrap();
    let features: Vec<FeatureVector> = items
        .iter()
        .map(|it| FeatureVector::from_samples(&it.buffer.samples))
        .collect();
    let labels: Vec<Label> = items
        .iter()
        .map(|it| if it.corrupted { Label::Corrupted } else { Label::Clean })
        .collect();
    train_svm(&features, &labels, 1.0).unwrap()
}

fn quick_config() -> PipelineConfig {
    PipelineConfig {
        wavelet: WaveletChoice::Named("fk6".into()),
        level: LevelChoice::Fixed(3),
        swarm: SwarmConfig {
            population: 6,
            iterations: 6,
            ..SwarmConfig::default()
        },
        ..PipelineConfig::default()
    }
}

#[test]
fn trained_classifier_routes_segments_through_the_pipeline() {
    let model = trained_model(40_000);

    let clean_channel = simulate_clean_eeg(&SimulationSpec {
        seed: 41_000,
        artifact_windows: Vec::new(),
        ..SimulationSpec::default()
    })
    .unwrap();
    let (_, _, corrupted_channel) = simulate_trial(&SimulationSpec {
        seed: 41_001,
        ..SimulationSpec::default()
    })
    .unwrap();
    let rec = Recording::new(vec![clean_channel, corrupted_channel]).unwrap();

    // The model must route the channels before the pipeline can.
    let segments = segmentize(&rec, 10.0).unwrap();
    assert_eq!(classify(&model, &segments[0]), Label::Clean);
    assert_eq!(classify(&model, &segments[1]), Label::Corrupted);

    let cfg = quick_config();
    let (out, traces) = denoise_recording(&rec, &cfg, &model, None).unwrap();
    assert_eq!(out.n_channels(), 2);
    assert_eq!(out.n_samples(), rec.n_samples());
    assert_eq!(traces.len(), 2);

    // Clean channel survives bitwise; corrupted channel is rewritten.
    assert!(rec.channels[0]
        .samples
        .iter()
        .zip(&out.channels[0].samples)
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert_ne!(rec.channels[1].samples, out.channels[1].samples);

    assert_eq!(traces[0].label, "clean");
    assert!(traces[0].correction.is_none());
    assert_eq!(traces[1].label, "corrupted");
    let correction = traces[1].correction.as_ref().unwrap();
    assert_eq!(correction.wavelet, "fk6");
    assert_eq!(correction.level, 3);
    assert_eq!(correction.bandwidths.len(), 8);

    // Scoring without ground truth still yields mutual information.
    let report = evaluate_run(&rec, &out, None, &cfg).unwrap();
    assert!(report.cc.is_none());
    assert!(report.mi.is_finite());
    assert_eq!(report.per_channel.len(), 2);
}

#[test]
fn reference_guided_run_beats_its_own_input() {
    let spec = SimulationSpec {
        seed: 42_000,
        ..SimulationSpec::default()
    };
    let (clean, _, corrupted) = simulate_trial(&spec).unwrap();
    let truth = Recording::new(vec![clean]).unwrap();
    let rec = Recording::new(vec![corrupted]).unwrap();

    let model = trained_model(40_000);
    let cfg = PipelineConfig {
        fitness: FitnessMode::Oracle,
        swarm: SwarmConfig {
            population: 8,
            iterations: 12,
            ..SwarmConfig::default()
        },
        ..quick_config()
    };
    let (out, traces) = denoise_recording(&rec, &cfg, &model, Some(&truth)).unwrap();
    assert_eq!(traces[0].label, "corrupted");

    let before = correlation_coefficient(&rec.channels[0], &truth.channels[0]).unwrap();
    let after = correlation_coefficient(&out.channels[0], &truth.channels[0]).unwrap();
    assert!(
        after > before,
        "full-duration artifact should denoise: cc {before:.4} -> {after:.4}"
    );

    let report = evaluate_run(&rec, &out, Some(&truth), &cfg).unwrap();
    assert_eq!(report.cc, Some(after));
    assert!(report.ssim.is_some());
    assert!(report.sar_db.is_some());
}

#[test]
fn model_survives_serialization_mid_pipeline() {
    let model = trained_model(40_000);
    let reloaded = SvmModel::from_json(&model.to_json().unwrap()).unwrap();

    let (_, _, corrupted) = simulate_trial(&SimulationSpec {
        seed: 43_000,
        ..SimulationSpec::default()
    })
    .unwrap();
    let rec = Recording::new(vec![corrupted]).unwrap();
    let cfg = quick_config();

    let (out_a, traces_a) = denoise_recording(&rec, &cfg, &model, None).unwrap();
    let (out_b, traces_b) = denoise_recording(&rec, &cfg, &reloaded, None).unwrap();
    assert_eq!(out_a.channels[0].samples, out_b.channels[0].samples);
    assert_eq!(
        serde_json::to_string(&traces_a).unwrap(),
        serde_json::to_string(&traces_b).unwrap()
    );
}
