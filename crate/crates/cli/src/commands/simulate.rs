//! The `simulate` subcommand: one seeded clean/artifact/corrupted triple.

use std::time::Instant;

use eegdenoise::io::{write_manifest, write_signal_csv, RunManifest};
use eegdenoise::simulator::{simulate_trial, SimulationSpec};
use eegdenoise::{Error, Recording, SignalBuffer};

use super::{display, SimulateArgs};

/// Parses "start:end,start:end" (seconds). Empty input means no windows.
fn parse_windows(raw: &str) -> Result<Vec<(f64, f64)>, Error> {
    if raw.is_empty() {
        return Ok(Vec::new());
    }
    raw.split(',')
        .map(|part| {
            let (a, b) = part.split_once(':').ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "--windows entry {part:?} is not of the form start:end"
                ))
            })?;
            let parse = |s: &str, what: &str| {
                s.trim().parse::<f64>().map_err(|_| {
                    Error::InvalidParameter(format!(
                        "--windows {what} {s:?} is not a number (in entry {part:?})"
                    ))
                })
            };
            Ok((parse(a, "start")?, parse(b, "end")?))
        })
        .collect()
}

pub fn run(args: SimulateArgs) -> Result<(), Error> {
    let started = Instant::now();
    let windows = match &args.windows {
        Some(raw) => parse_windows(raw)?,
        None => vec![(0.0, args.duration)],
    };
    let spec = SimulationSpec {
        duration_seconds: args.duration,
        fs: args.fs,
        artifact_windows: windows,
        snr_db: args.snr_db,
        seed: args.seed,
        ..SimulationSpec::default()
    };
    spec.validate().map_err(|e| {
        Error::InvalidParameter(format!(
            "{e}; check --windows, --duration, --fs, and --snr-db"
        ))
    })?;

    let (clean, emg, corrupted) = simulate_trial(&spec)?;
    let single = |buffer: SignalBuffer| Recording::new(vec![buffer]);
    write_signal_csv(&args.out_clean, &single(clean)?)?;
    write_signal_csv(&args.out_emg, &single(emg)?)?;
    write_signal_csv(&args.out_corrupted, &single(corrupted)?)?;

    let mut manifest = RunManifest::new(
        "simulate",
        serde_json::to_value(&spec).map_err(|e| Error::Format(e.to_string()))?,
    );
    manifest.seed = Some(args.seed);
    manifest.outputs = vec![
        display(&args.out_clean),
        display(&args.out_emg),
        display(&args.out_corrupted),
    ];
    manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    write_manifest(&args.out_corrupted, &manifest)?;
    Ok(())
}
