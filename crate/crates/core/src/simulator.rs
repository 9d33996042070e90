//! Seeded synthesis of clean EEG, burst-localized EMG artifacts, and their
//! sum, plus a labeled-dataset builder for classifier training.
//!
//! Clean EEG is a sum of sinusoids with random frequencies and phases,
//! normalized to unit RMS. EMG is band-limited Gaussian noise gated to the
//! requested artifact windows with short raised-cosine ramps, scaled so the
//! in-window power ratio against the clean signal matches `snr_db`.

use crate::error::{Error, Result};
use crate::signal::{bandpass, SignalBuffer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Everything needed to synthesize one trial deterministically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub duration_seconds: f64,
    pub fs: f64,
    pub n_sinusoids: usize,
    /// Frequency range of the clean-signal sinusoids, Hz.
    pub eeg_band: (f64, f64),
    /// Pass band of the artifact noise, Hz.
    pub emg_band: (f64, f64),
    /// Time spans (start s, end s) where the artifact is active.
    pub artifact_windows: Vec<(f64, f64)>,
    /// Clean-signal power over artifact power inside the windows, dB.
    pub snr_db: f64,
    pub seed: u64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            duration_seconds: 10.0,
            fs: 250.0,
            n_sinusoids: 20,
            eeg_band: (0.1, 30.0),
            emg_band: (5.0, 45.0),
            artifact_windows: vec![(0.0, 10.0)],
            snr_db: -3.0,
            seed: 0,
        }
    }
}

/// Width of the raised-cosine on/off ramps at artifact window edges.
const RAMP_SECONDS: f64 = 0.010;

// Separate generator streams so each product is reproducible on its own:
// composing a trial uses the same clean samples as a standalone clean call.
const STREAM_CLEAN: u64 = 0;
const STREAM_EMG: u64 = 1;
const STREAM_LAYOUT: u64 = 2;

impl SimulationSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_seconds > 0.0) || !(self.fs > 0.0) {
            return Err(Error::InvalidParameter(
                "duration and sampling rate must be positive".into(),
            ));
        }
        if self.n_sinusoids < 1 {
            return Err(Error::InvalidParameter(
                "need at least one sinusoid".into(),
            ));
        }
        for (name, (lo, hi)) in [("eeg_band", self.eeg_band), ("emg_band", self.emg_band)] {
            if !(lo >= 0.0 && lo <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "{name} ({lo}, {hi}) is not an ascending nonnegative range"
                )));
            }
        }
        let max_edge = self.eeg_band.1.max(self.emg_band.1);
        if self.fs <= 2.0 * max_edge {
            return Err(Error::InvalidParameter(format!(
                "sampling rate {} cannot represent content up to {} Hz",
                self.fs, max_edge
            )));
        }
        let mut sorted = self.artifact_windows.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prev_end = f64::NEG_INFINITY;
        for (start, end) in sorted {
            if !(start < end) {
                return Err(Error::InvalidParameter(format!(
                    "artifact window ({start}, {end}) has start >= end"
                )));
            }
            if start < 0.0 || end > self.duration_seconds {
                return Err(Error::InvalidParameter(format!(
                    "artifact window ({start}, {end}) outside [0, {}]",
                    self.duration_seconds
                )));
            }
            if start < prev_end {
                return Err(Error::InvalidParameter(
                    "artifact windows overlap".into(),
                ));
            }
            prev_end = end;
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_seconds * self.fs).round() as usize
    }

    fn rng(&self, stream: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn gaussian(rng: &mut ChaCha12Rng) -> f64 {
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    (-2.0 * u.ln()).sqrt() * v.cos()
}

/// Sum of `n_sinusoids` unit-amplitude sinusoids with frequencies uniform
/// in `eeg_band` and phases uniform in [0, 2π), normalized to unit RMS.
pub fn simulate_clean_eeg(spec: &SimulationSpec) -> Result<SignalBuffer> {
    spec.validate()?;
    let mut rng = spec.rng(STREAM_CLEAN);
    let (lo, hi) = spec.eeg_band;
    let components: Vec<(f64, f64)> = (0..spec.n_sinusoids)
        .map(|_| {
            let f = if lo == hi { lo } else { rng.gen_range(lo..hi) };
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            (f, phase)
        })
        .collect();
    let n = spec.n_samples();
    let mut samples = vec![0.0; n];
    for (f, phase) in components {
        let w = std::f64::consts::TAU * f / spec.fs;
        for (i, s) in samples.iter_mut().enumerate() {
            *s += (w * i as f64 + phase).sin();
        }
    }
    let rms = (samples.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if rms > 0.0 {
        samples.iter_mut().for_each(|v| *v /= rms);
    }
    SignalBuffer::new(samples, spec.fs)
}

/// Gate that is 1 inside each artifact window, 0 outside, with 10 ms
/// raised-cosine ramps at the edges (shorter windows get proportionally
/// overlapping ramps).
fn window_mask(spec: &SimulationSpec) -> Vec<f64> {
    let n = spec.n_samples();
    let mut mask = vec![0.0; n];
    let rc = |z: f64| 0.5 * (1.0 - (std::f64::consts::PI * z.clamp(0.0, 1.0)).cos());
    for &(start, end) in &spec.artifact_windows {
        let i0 = (start * spec.fs).round() as usize;
        let i1 = ((end * spec.fs).round() as usize).min(n);
        for (i, m) in mask.iter_mut().enumerate().take(i1).skip(i0) {
            let t = i as f64 / spec.fs;
            let up = (t - start) / RAMP_SECONDS;
            let down = (end - t) / RAMP_SECONDS;
            *m = rc(up) * rc(down);
        }
    }
    mask
}

/// Band-limited Gaussian noise gated to the artifact windows and scaled so
/// the in-window power ratio against the clean signal equals `snr_db`.
/// With no windows the result is all zeros (an uncontaminated trial).
pub fn simulate_emg(spec: &SimulationSpec) -> Result<SignalBuffer> {
    spec.validate()?;
    let n = spec.n_samples();
    if spec.artifact_windows.is_empty() {
        return SignalBuffer::new(vec![0.0; n], spec.fs);
    }
    let mut rng = spec.rng(STREAM_EMG);
    let noise: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
    // The band-pass is applied twice: one zero-phase pass of the shared
    // filter leaves >1% of the noise energy in the transition skirts just
    // outside the band, and the artifact is specified as band-limited.
    let once = bandpass(
        &SignalBuffer::new(noise, spec.fs)?,
        spec.emg_band.0,
        spec.emg_band.1,
    )?;
    let shaped = bandpass(&once, spec.emg_band.0, spec.emg_band.1)?;

    let mask = window_mask(spec);
    let mut samples: Vec<f64> = shaped
        .samples
        .iter()
        .zip(&mask)
        .map(|(x, m)| x * m)
        .collect();

    let clean = simulate_clean_eeg(spec)?;
    let inside: Vec<usize> = (0..n).filter(|&i| mask[i] > 0.0).collect();
    if !inside.is_empty() {
        let power = |v: &[f64]| {
            inside.iter().map(|&i| v[i] * v[i]).sum::<f64>() / inside.len() as f64
        };
        let p_clean = power(&clean.samples);
        let p_emg = power(&samples);
        if p_emg > 0.0 {
            let target = p_clean / 10f64.powf(spec.snr_db / 10.0);
            let scale = (target / p_emg).sqrt();
            samples.iter_mut().for_each(|v| *v *= scale);
        }
    }
    SignalBuffer::new(samples, spec.fs)
}

/// Pointwise sum of the clean signal and the artifact. Nothing else: no
/// renormalization, so the artifact can be recovered by subtraction.
pub fn compose_ceeg(clean: &SignalBuffer, emg: &SignalBuffer) -> Result<SignalBuffer> {
    if clean.len() != emg.len() || clean.fs != emg.fs {
        return Err(Error::InvalidParameter(format!(
            "clean ({} @ {} Hz) and artifact ({} @ {} Hz) do not line up",
            clean.len(),
            clean.fs,
            emg.len(),
            emg.fs
        )));
    }
    SignalBuffer::new(
        clean
            .samples
            .iter()
            .zip(&emg.samples)
            .map(|(a, b)| a + b)
            .collect(),
        clean.fs,
    )
}

/// Convenience: clean, artifact, and their sum for one spec.
pub fn simulate_trial(spec: &SimulationSpec) -> Result<(SignalBuffer, SignalBuffer, SignalBuffer)> {
    let clean = simulate_clean_eeg(spec)?;
    let emg = simulate_emg(spec)?;
    let ceeg = compose_ceeg(&clean, &emg)?;
    Ok((clean, emg, ceeg))
}

/// One labeled training example.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub buffer: SignalBuffer,
    pub corrupted: bool,
    pub seed: u64,
    pub spec: SimulationSpec,
}

/// Builds a balanced labeled dataset: `n_per_class` clean trials and
/// `n_per_class` corrupted trials, each from its own seed. Corrupted trials
/// get randomized artifact layouts: a quarter of them are contaminated for
/// the full duration, the rest by one to three bursts covering 40–95% of
/// the trial.
pub fn build_dataset(base: &SimulationSpec, n_per_class: usize) -> Result<Vec<DatasetItem>> {
    base.validate()?;
    if n_per_class == 0 {
        return Err(Error::InvalidParameter(
            "need at least one trial per class".into(),
        ));
    }
    let mut items = Vec::with_capacity(2 * n_per_class);
    for i in 0..n_per_class {
        let mut spec = base.clone();
        spec.seed = base.seed.wrapping_add(i as u64);
        spec.artifact_windows.clear();
        let buffer = simulate_clean_eeg(&spec)?;
        items.push(DatasetItem {
            buffer,
            corrupted: false,
            seed: spec.seed,
            spec,
        });
    }
    for i in 0..n_per_class {
        let mut spec = base.clone();
        spec.seed = base.seed.wrapping_add((n_per_class + i) as u64);
        spec.artifact_windows = random_layout(&spec);
        let (_, _, ceeg) = simulate_trial(&spec)?;
        items.push(DatasetItem {
            buffer: ceeg,
            corrupted: true,
            seed: spec.seed,
            spec,
        });
    }
    Ok(items)
}

/// Random artifact layout: 25% full-duration, otherwise 1–3 bursts with
/// total coverage uniform in [0.4, 0.95] of the duration, one burst per
/// equal-width slot so they never overlap.
fn random_layout(spec: &SimulationSpec) -> Vec<(f64, f64)> {
    let mut rng = spec.rng(STREAM_LAYOUT);
    let d = spec.duration_seconds;
    if rng.gen_range(0.0..1.0) < 0.25 {
        return vec![(0.0, d)];
    }
    let k = rng.gen_range(1..=3usize);
    let coverage = rng.gen_range(0.4..0.95);
    let slot = d / k as f64;
    let burst = coverage * slot;
    (0..k)
        .map(|j| {
            let slack = slot - burst;
            let start = j as f64 * slot + rng.gen_range(0.0..1.0) * slack;
            (start, start + burst)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psd;

    fn burst_spec(seed: u64) -> SimulationSpec {
        SimulationSpec {
            artifact_windows: vec![(0.0, 1.3), (2.0, 4.2), (7.6, 8.5)],
            seed,
            ..SimulationSpec::default()
        }
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut s = SimulationSpec::default();
        s.artifact_windows = vec![(1.0, 0.5)];
        assert!(s.validate().is_err());
        s.artifact_windows = vec![(0.0, 11.0)];
        assert!(s.validate().is_err());
        s.artifact_windows = vec![(0.0, 3.0), (2.0, 5.0)];
        assert!(s.validate().is_err());
        s.artifact_windows = vec![(0.0, 2.0), (2.0, 5.0)];
        assert!(s.validate().is_ok());
        s.fs = 80.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn clean_is_deterministic_and_unit_rms() {
        let spec = SimulationSpec::default();
        let a = simulate_clean_eeg(&spec).unwrap();
        let b = simulate_clean_eeg(&spec).unwrap();
        assert_eq!(a.samples, b.samples);
        assert!((a.rms() - 1.0).abs() < 1e-12);

        let other = SimulationSpec {
            seed: 1,
            ..SimulationSpec::default()
        };
        assert_ne!(a.samples, simulate_clean_eeg(&other).unwrap().samples);
    }

    #[test]
    fn single_sinusoid_peaks_at_its_frequency() {
        let spec = SimulationSpec {
            n_sinusoids: 1,
            eeg_band: (10.0, 10.0),
            ..SimulationSpec::default()
        };
        let x = simulate_clean_eeg(&spec).unwrap();
        let spectrum = psd(&x).unwrap();
        let peak = spectrum
            .iter()
            .cloned()
            .fold((0.0, f64::NEG_INFINITY), |b, c| if c.1 > b.1 { c } else { b });
        assert!((peak.0 - 10.0).abs() <= 250.0 / 256.0 + 1e-9);
    }

    #[test]
    fn clean_energy_stays_in_band() {
        let spec = SimulationSpec::default();
        let x = simulate_clean_eeg(&spec).unwrap();
        let spectrum = psd(&x).unwrap();
        let total: f64 = spectrum.iter().map(|p| p.1).sum();
        let below31: f64 = spectrum.iter().filter(|p| p.0 < 31.0).map(|p| p.1).sum();
        assert!(below31 / total >= 0.99, "in-band fraction {}", below31 / total);
    }

    #[test]
    fn emg_no_windows_is_silent() {
        let spec = SimulationSpec {
            artifact_windows: vec![],
            ..SimulationSpec::default()
        };
        let e = simulate_emg(&spec).unwrap();
        assert!(e.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn emg_full_window_equal_power_at_zero_db() {
        let spec = SimulationSpec {
            snr_db: 0.0,
            ..SimulationSpec::default()
        };
        let clean = simulate_clean_eeg(&spec).unwrap();
        let emg = simulate_emg(&spec).unwrap();
        let ratio = emg.rms() / clean.rms();
        assert!((ratio - 1.0).abs() < 0.02, "RMS ratio {ratio}");
    }

    #[test]
    fn emg_energy_stays_in_band() {
        let spec = SimulationSpec::default();
        let e = simulate_emg(&spec).unwrap();
        let spectrum = psd(&e).unwrap();
        let total: f64 = spectrum.iter().map(|p| p.1).sum();
        let outside: f64 = spectrum
            .iter()
            .filter(|p| p.0 < 4.0 || p.0 > 46.0)
            .map(|p| p.1)
            .sum();
        assert!(outside / total <= 0.01, "out-of-band fraction {}", outside / total);
    }

    #[test]
    fn emg_is_zero_outside_windows() {
        let spec = burst_spec(3);
        let e = simulate_emg(&spec).unwrap();
        let in_any_window = |t: f64| {
            spec.artifact_windows
                .iter()
                .any(|&(s, en)| t >= s && t <= en)
        };
        for (i, &v) in e.samples.iter().enumerate() {
            if !in_any_window(i as f64 / spec.fs) {
                assert_eq!(v, 0.0, "nonzero artifact at sample {i}");
            }
        }
    }

    #[test]
    fn compose_is_exact_addition() {
        let spec = burst_spec(4);
        let clean = simulate_clean_eeg(&spec).unwrap();
        let emg = simulate_emg(&spec).unwrap();
        let y = compose_ceeg(&clean, &emg).unwrap();
        for i in 0..y.len() {
            assert_eq!(y.samples[i], clean.samples[i] + emg.samples[i]);
        }

        let zeros = SignalBuffer::new(vec![0.0; clean.len()], clean.fs).unwrap();
        let same = compose_ceeg(&clean, &zeros).unwrap();
        assert_eq!(same.samples, clean.samples);

        let short = SignalBuffer::new(vec![0.0; 5], clean.fs).unwrap();
        assert!(compose_ceeg(&clean, &short).is_err());
    }

    #[test]
    fn trial_reuses_the_standalone_clean_signal() {
        let spec = burst_spec(5);
        let (clean, emg, ceeg) = simulate_trial(&spec).unwrap();
        assert_eq!(clean.samples, simulate_clean_eeg(&spec).unwrap().samples);
        assert_eq!(emg.samples, simulate_emg(&spec).unwrap().samples);
        assert_eq!(ceeg.len(), clean.len());
    }

    #[test]
    fn bursts_raise_in_window_variance() {
        for seed in 0..10 {
            let spec = burst_spec(seed);
            let (_, _, y) = simulate_trial(&spec).unwrap();
            let in_any = |i: usize| {
                let t = i as f64 / spec.fs;
                spec.artifact_windows
                    .iter()
                    .any(|&(s, e)| t >= s && t <= e)
            };
            let var = |idx: &[usize]| {
                let m = idx.iter().map(|&i| y.samples[i]).sum::<f64>() / idx.len() as f64;
                idx.iter()
                    .map(|&i| (y.samples[i] - m) * (y.samples[i] - m))
                    .sum::<f64>()
                    / idx.len() as f64
            };
            let inside: Vec<usize> = (0..y.len()).filter(|&i| in_any(i)).collect();
            let outside: Vec<usize> = (0..y.len()).filter(|&i| !in_any(i)).collect();
            assert!(
                var(&inside) > var(&outside),
                "seed {seed}: in-window variance not dominant"
            );
        }
    }

    #[test]
    fn dataset_is_balanced_with_distinct_seeds() {
        let base = SimulationSpec::default();
        let items = build_dataset(&base, 12).unwrap();
        assert_eq!(items.len(), 24);
        assert_eq!(items.iter().filter(|i| i.corrupted).count(), 12);
        let mut seeds: Vec<u64> = items.iter().map(|i| i.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 24);

        // Same base, same dataset.
        let again = build_dataset(&base, 12).unwrap();
        for (a, b) in items.iter().zip(&again) {
            assert_eq!(a.buffer.samples, b.buffer.samples);
        }
    }

    #[test]
    fn dataset_corrupted_trials_have_excess_power() {
        let base = SimulationSpec::default();
        let items = build_dataset(&base, 8).unwrap();
        for item in items {
            let rms = item.buffer.rms();
            if item.corrupted {
                assert!(rms > 1.1, "corrupted trial rms {rms}");
            } else {
                assert!((rms - 1.0).abs() < 1e-9, "clean trial rms {rms}");
            }
        }
    }
}
