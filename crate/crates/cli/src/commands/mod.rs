//! Subcommand definitions and shared helpers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod denoise;
pub mod psd;
pub mod select_wavelet;
pub mod simulate;
pub mod train;

#[derive(Parser)]
#[command(
    name = "eegdenoise",
    version,
    about = "Detects and removes muscle-artifact contamination from EEG recordings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a seeded clean/artifact/corrupted signal triple
    Simulate(SimulateArgs),
    /// Train the segment-corruption classifier on simulated data
    Train(TrainArgs),
    /// Classify and correct the corrupted segments of a recording
    Denoise(DenoiseArgs),
    /// Rank wavelets by round-trip reconstruction error on given signals
    SelectWavelet(SelectWaveletArgs),
    /// Welch power spectral density of each channel of each input
    Psd(PsdArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Signal duration in seconds
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// Sampling rate in Hz
    #[arg(long, default_value_t = 250.0)]
    pub fs: f64,
    /// Master seed for every random draw in this command
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Artifact windows as "start:end,start:end" in seconds; an empty
    /// string means no artifact. Default: the whole duration.
    #[arg(long)]
    pub windows: Option<String>,
    /// Clean-signal power over artifact power inside the windows, in dB
    #[arg(long = "snr-db", default_value_t = -3.0)]
    pub snr_db: f64,
    #[arg(long = "out-clean", default_value = "clean.csv")]
    pub out_clean: PathBuf,
    #[arg(long = "out-emg", default_value = "emg.csv")]
    pub out_emg: PathBuf,
    #[arg(long = "out-corrupted", default_value = "corrupted.csv")]
    pub out_corrupted: PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// Simulated segments per class (clean and corrupted)
    #[arg(long = "n-per-class", default_value_t = 200)]
    pub n_per_class: usize,
    /// Master seed for dataset generation
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Where to write the trained model (JSON)
    #[arg(long = "model-out", default_value = "model.json")]
    pub model_out: PathBuf,
}

#[derive(Args)]
pub struct DenoiseArgs {
    /// Input recording (signal CSV)
    #[arg(long)]
    pub input: PathBuf,
    /// Trained classifier model (JSON)
    #[arg(long)]
    pub model: PathBuf,
    /// Output recording path; trace, report, and history files derive
    /// their names from it
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth clean recording; switches bandwidth tuning to the
    /// reference-based fitness and enables CC/SSIM in the report
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Mother wavelet name, or "auto" to select by reconstruction error
    #[arg(long, default_value = "auto")]
    pub wavelet: String,
    /// Decomposition level, or "auto" to select by subband entropy
    #[arg(long, default_value = "auto")]
    pub level: String,
    /// Bandwidth optimizer: gwo or pso
    #[arg(long, default_value = "gwo")]
    pub optimizer: String,
    /// Master seed for the per-segment optimizer runs
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct SelectWaveletArgs {
    /// One or more signal CSV files; every channel counts as one signal
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Decomposition level used for the round trip
    #[arg(long, default_value_t = 3)]
    pub level: usize,
    /// Comma-separated candidate wavelet names; default is the whole
    /// embedded database
    #[arg(long)]
    pub candidates: Option<String>,
    /// Write the ranking CSV here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct PsdArgs {
    /// One or more signal CSV files
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
}

/// Reads a signal CSV and surfaces the default-rate fallback as a stderr
/// warning plus a manifest note.
pub(crate) fn read_signal_warned(
    path: &std::path::Path,
    notes: &mut Vec<String>,
) -> Result<eegdenoise::io::SignalFile, eegdenoise::Error> {
    let file = eegdenoise::io::read_signal_csv(path)?;
    if file.fs_defaulted {
        let note = format!(
            "{}: no '# fs=' header; assuming {} Hz",
            path.display(),
            eegdenoise::io::DEFAULT_FS
        );
        eprintln!("warning: {note}");
        notes.push(note);
    }
    Ok(file)
}

pub(crate) fn display(path: &std::path::Path) -> String {
    path.display().to_string()
}
