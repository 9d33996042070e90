//! The `train` subcommand: simulate a balanced dataset, fit the corruption
//! classifier on 80% of each class, report held-out performance, and
//! persist the model.

use std::time::Instant;

use eegdenoise::classifier::{decision_value, train_svm, ClassifierReport, FeatureVector};
use eegdenoise::io::{atomic_write, write_manifest, RunManifest};
use eegdenoise::simulator::{build_dataset, SimulationSpec};
use eegdenoise::{Error, Label};

use super::{display, TrainArgs};

const SOFT_MARGIN_C: f64 = 1.0;

pub fn run(args: TrainArgs) -> Result<(), Error> {
    let started = Instant::now();
    let base = SimulationSpec {
        seed: args.seed,
        ..SimulationSpec::default()
    };
    // Items come back clean-first then corrupted, each trial from its own
    // seed, so taking the leading 80% of each class is a stratified split.
    let items = build_dataset(&base, args.n_per_class)?;
    let n = args.n_per_class;
    let n_train = n * 4 / 5;
    if n_train == 0 || n_train == n {
        return Err(Error::InvalidParameter(format!(
            "--n-per-class {n} cannot be split 80:20 with both sides non-empty"
        )));
    }

    let features: Vec<FeatureVector> = items
        .iter()
        .map(|it| FeatureVector::from_samples(&it.buffer.samples))
        .collect();
    let label_of = |corrupted: bool| {
        if corrupted {
            Label::Corrupted
        } else {
            Label::Clean
        }
    };

    let train_idx: Vec<usize> = (0..n_train).chain(n..n + n_train).collect();
    let test_idx: Vec<usize> = (n_train..n).chain(n + n_train..2 * n).collect();

    let train_features: Vec<FeatureVector> = train_idx.iter().map(|&i| features[i]).collect();
    let train_labels: Vec<Label> = train_idx
        .iter()
        .map(|&i| label_of(items[i].corrupted))
        .collect();
    let model = train_svm(&train_features, &train_labels, SOFT_MARGIN_C)?;

    let (mut tp, mut fp, mut tn, mut fnn) = (0u64, 0u64, 0u64, 0u64);
    for &i in &test_idx {
        let predicted_corrupted = decision_value(&model, &features[i]) > 0.0;
        match (items[i].corrupted, predicted_corrupted) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (false, false) => tn += 1,
            (true, false) => fnn += 1,
        }
    }
    let report = ClassifierReport::from_counts(tp, fp, tn, fnn);
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?
    );

    let mut model_json = model.to_json()?;
    model_json.push('\n');
    atomic_write(&args.model_out, model_json.as_bytes())?;

    let mut manifest = RunManifest::new(
        "train",
        serde_json::json!({
            "n_per_class": args.n_per_class,
            "split": "80:20 stratified",
            "soft_margin_c": SOFT_MARGIN_C,
            "simulation": serde_json::to_value(&base).map_err(|e| Error::Format(e.to_string()))?,
        }),
    );
    manifest.seed = Some(args.seed);
    manifest.outputs = vec![display(&args.model_out)];
    manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    write_manifest(&args.model_out, &manifest)?;
    Ok(())
}
