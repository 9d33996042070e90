//! The `select-wavelet` subcommand: rank candidate wavelets by mean
//! decompose-reconstruct round-trip error over the given signals.

use std::time::Instant;

use eegdenoise::io::{atomic_write, write_manifest, RunManifest};
use eegdenoise::wavelet::{filter_names, get_filter, reconstruction_error};
use eegdenoise::{Error, SignalBuffer};

use super::{display, read_signal_warned, SelectWaveletArgs};

pub fn run(args: SelectWaveletArgs) -> Result<(), Error> {
    let started = Instant::now();
    let mut notes = Vec::new();

    let candidates: Vec<&'static str> = match &args.candidates {
        Some(raw) => raw
            .split(',')
            .map(|name| {
                get_filter(name.trim())
                    .map(|f| f.name)
                    .map_err(|e| Error::InvalidParameter(format!("--candidates: {e}")))
            })
            .collect::<Result<_, _>>()?,
        None => filter_names(),
    };

    let mut signals: Vec<SignalBuffer> = Vec::new();
    for path in &args.input {
        let file = read_signal_warned(path, &mut notes)?;
        signals.extend(file.recording.channels);
    }

    // (name, mean, population std) of the round-trip error per candidate.
    let mut rows: Vec<(&str, f64, f64)> = Vec::with_capacity(candidates.len());
    for name in &candidates {
        let filter = get_filter(name)?;
        let errors = signals
            .iter()
            .map(|s| reconstruction_error(s, filter, args.level))
            .collect::<Result<Vec<f64>, Error>>()?;
        let mean = errors.iter().sum::<f64>() / errors.len() as f64;
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>()
            / errors.len() as f64;
        rows.push((name, mean, var.sqrt()));
    }
    rows.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(b.0)));

    let mut table = String::from("wavelet,mean_error,std_error\n");
    for (name, mean, std) in &rows {
        table.push_str(&format!("{},{:.6e},{:.6e}\n", name, mean, std));
    }

    match &args.out {
        Some(path) => {
            atomic_write(path, table.as_bytes())?;
            let mut manifest = RunManifest::new(
                "select-wavelet",
                serde_json::json!({
                    "level": args.level,
                    "candidates": candidates,
                    "inputs": args.input.iter().map(|p| display(p)).collect::<Vec<_>>(),
                    "signals": signals.len(),
                }),
            );
            manifest.outputs = vec![display(path)];
            manifest.elapsed_seconds = started.elapsed().as_secs_f64();
            manifest.notes = notes;
            write_manifest(path, &manifest)?;
        }
        None => print!("{table}"),
    }
    Ok(())
}
