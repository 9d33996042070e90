//! The `denoise` subcommand: classify segments, correct the flagged ones,
//! and write the output signal plus trace, report, and history artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use eegdenoise::classifier::SvmModel;
use eegdenoise::io::{atomic_write, write_manifest, write_signal_csv, RunManifest};
use eegdenoise::optimizer::{Algorithm, FitnessMode, SwarmConfig};
use eegdenoise::pipeline::{
    denoise_recording, evaluate_run, DenoiseTrace, LevelChoice, PipelineConfig, WaveletChoice,
};
use eegdenoise::Error;

use super::{display, read_signal_warned, DenoiseArgs};

fn parse_algorithm(raw: &str) -> Result<Algorithm, Error> {
    match raw {
        "gwo" => Ok(Algorithm::Gwo),
        "pso" => Ok(Algorithm::Pso),
        other => Err(Error::InvalidParameter(format!(
            "--optimizer must be gwo or pso, got {other:?}"
        ))),
    }
}

fn derived(out: &Path, ext: &str) -> PathBuf {
    out.with_extension(ext)
}

/// Optimizer history CSV: one block per corrected segment, introduced by a
/// comment row locating it, then (iteration, best_fitness) rows.
fn format_history(traces: &[DenoiseTrace], seg_len: usize) -> String {
    let mut out = String::from("iteration,best_fitness\n");
    for trace in traces {
        let Some(c) = &trace.correction else { continue };
        let _ = writeln!(
            out,
            "# channel={} segment={}",
            trace.channel_index,
            trace.start_sample / seg_len
        );
        for (i, fitness) in c.history.iter().enumerate() {
            let _ = writeln!(out, "{},{:.16e}", i, fitness);
        }
    }
    out
}

pub fn run(args: DenoiseArgs) -> Result<(), Error> {
    let started = Instant::now();
    let mut notes = Vec::new();

    let model = SvmModel::from_json(&fs::read_to_string(&args.model)?)?;
    let input = read_signal_warned(&args.input, &mut notes)?;
    let reference = match &args.reference {
        Some(path) => Some(read_signal_warned(path, &mut notes)?),
        None => None,
    };

    let cfg = PipelineConfig {
        wavelet: WaveletChoice::try_from(args.wavelet.clone())
            .map_err(|e| Error::InvalidParameter(format!("--wavelet: {e}")))?,
        level: LevelChoice::try_from(args.level.clone())
            .map_err(|e| Error::InvalidParameter(format!("--level: {e}")))?,
        swarm: SwarmConfig {
            algorithm: parse_algorithm(&args.optimizer)?,
            ..SwarmConfig::default()
        },
        fitness: if reference.is_some() {
            FitnessMode::Oracle
        } else {
            FitnessMode::Literal
        },
        model_reference: Some(display(&args.model)),
        seed: args.seed,
        ..PipelineConfig::default()
    };

    let (denoised, traces) = denoise_recording(
        &input.recording,
        &cfg,
        &model,
        reference.as_ref().map(|r| &r.recording),
    )?;
    let report = evaluate_run(
        &input.recording,
        &denoised,
        reference.as_ref().map(|r| &r.recording),
        &cfg,
    )?;

    write_signal_csv(&args.out, &denoised)?;

    let trace_path = derived(&args.out, "trace.jsonl");
    let mut trace_text = String::new();
    for trace in &traces {
        let line = serde_json::to_string(trace).map_err(|e| Error::Format(e.to_string()))?;
        trace_text.push_str(&line);
        trace_text.push('\n');
    }
    atomic_write(&trace_path, trace_text.as_bytes())?;

    let report_path = derived(&args.out, "report.json");
    let mut report_text =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Format(e.to_string()))?;
    report_text.push('\n');
    atomic_write(&report_path, report_text.as_bytes())?;

    let history_path = derived(&args.out, "history.csv");
    let seg_len = (cfg.segment_seconds * input.recording.fs()).round() as usize;
    atomic_write(&history_path, format_history(&traces, seg_len).as_bytes())?;

    if traces.iter().all(|t| t.correction.is_none()) {
        notes.push("no corrupted segments".into());
    }
    let mut manifest = RunManifest::new(
        "denoise",
        serde_json::to_value(&cfg).map_err(|e| Error::Format(e.to_string()))?,
    );
    manifest.seed = Some(args.seed);
    manifest.outputs = vec![
        display(&args.out),
        display(&trace_path),
        display(&report_path),
        display(&history_path),
    ];
    manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    manifest.notes = notes;
    write_manifest(&args.out, &manifest)?;
    Ok(())
}
