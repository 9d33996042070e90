//! The `psd` subcommand: Welch power spectral density per channel,
//! written next to each input as two-column CSV.

use std::path::{Path, PathBuf};
use std::time::Instant;

use eegdenoise::io::{atomic_write, write_manifest, RunManifest};
use eegdenoise::metrics::psd;
use eegdenoise::Error;

use super::{display, read_signal_warned, PsdArgs};

/// Output path for channel `k` of `input`: `rec.csv` becomes `rec.psd.csv`
/// for a single channel or `rec.ch<k>.psd.csv` when there are several.
fn psd_path(input: &Path, k: usize, n_channels: usize) -> PathBuf {
    if n_channels == 1 {
        input.with_extension("psd.csv")
    } else {
        input.with_extension(format!("ch{k}.psd.csv"))
    }
}

pub fn run(args: PsdArgs) -> Result<(), Error> {
    let started = Instant::now();
    let mut notes = Vec::new();
    let mut outputs = Vec::new();

    for input in &args.input {
        let file = read_signal_warned(input, &mut notes)?;
        let n_channels = file.recording.n_channels();
        for (k, channel) in file.recording.channels.iter().enumerate() {
            let spectrum = psd(channel)?;
            let mut table = String::from("frequency_hz,power\n");
            for (freq, power) in &spectrum {
                table.push_str(&format!("{:.8e},{:.8e}\n", freq, power));
            }
            let path = psd_path(input, k, n_channels);
            atomic_write(&path, table.as_bytes())?;
            outputs.push(display(&path));
        }
    }

    // Manifest lands at `<first input stem>.psd.manifest.json` regardless
    // of how many spectra were written.
    let primary = psd_path(&args.input[0], 0, 1);
    let mut manifest = RunManifest::new(
        "psd",
        serde_json::json!({
            "inputs": args.input.iter().map(|p| display(p)).collect::<Vec<_>>(),
        }),
    );
    manifest.outputs = outputs;
    manifest.elapsed_seconds = started.elapsed().as_secs_f64();
    manifest.notes = notes;
    write_manifest(&primary, &manifest)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_naming() {
        let p = Path::new("runs/rec.csv");
        assert_eq!(psd_path(p, 0, 1), Path::new("runs/rec.psd.csv"));
        assert_eq!(psd_path(p, 0, 3), Path::new("runs/rec.ch0.psd.csv"));
        assert_eq!(psd_path(p, 2, 3), Path::new("runs/rec.ch2.psd.csv"));
    }
}
