//! Evaluation measures: Pearson correlation, a global one-dimensional
//! structural-similarity index, histogram mutual information, and an
//! averaged-periodogram power spectral density.

use crate::error::{Error, Result};
use crate::signal::SignalBuffer;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Summary of a denoising run. `cc`, `ssim`, and `sar_db` need a clean
/// reference signal and are absent when none was supplied; `mi` is always
/// computed against the corrupted input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub cc: Option<f64>,
    pub ssim: Option<f64>,
    pub mi: f64,
    pub sar_db: Option<f64>,
    pub per_channel: Vec<ChannelEvaluation>,
}

/// Per-channel entries behind an `EvaluationReport`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelEvaluation {
    pub channel: usize,
    pub cc: Option<f64>,
    pub ssim: Option<f64>,
    pub mi: f64,
    pub sar_db: Option<f64>,
}

fn check_equal_len(a: &SignalBuffer, b: &SignalBuffer) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty input".into()));
    }
    Ok(())
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population (1/N) central moments used by `correlation_coefficient` and
/// `ssim_1d`: (mean_a, mean_b, var_a, var_b, cov_ab).
fn moments(a: &[f64], b: &[f64]) -> (f64, f64, f64, f64, f64) {
    let (ma, mb) = (mean(a), mean(b));
    let n = a.len() as f64;
    let mut va = 0.0;
    let mut vb = 0.0;
    let mut cov = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        va += dx * dx;
        vb += dy * dy;
        cov += dx * dy;
    }
    (ma, mb, va / n, vb / n, cov / n)
}

/// Pearson correlation coefficient of two equal-length signals.
pub fn correlation_coefficient(a: &SignalBuffer, b: &SignalBuffer) -> Result<f64> {
    check_equal_len(a, b)?;
    let (_, _, va, vb, cov) = moments(&a.samples, &b.samples);
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ConstantInput(
            "correlation undefined for a constant signal".into(),
        ));
    }
    Ok(cov / (va * vb).sqrt())
}

/// Global structural similarity: the product of luminance, contrast, and
/// structure factors computed over the whole signal (no windowing, no
/// stability constants).
///
/// ssim = (2·μa·μb)/(μa²+μb²) · (2·σa·σb)/(σa²+σb²) · σab/(σa·σb)
pub fn ssim_1d(a: &SignalBuffer, b: &SignalBuffer) -> Result<f64> {
    check_equal_len(a, b)?;
    let (ma, mb, va, vb, cov) = moments(&a.samples, &b.samples);
    if va == 0.0 || vb == 0.0 {
        return Err(Error::ConstantInput(
            "similarity undefined for a constant signal".into(),
        ));
    }
    let (sa, sb) = (va.sqrt(), vb.sqrt());
    let luminance = 2.0 * ma * mb / (ma * ma + mb * mb);
    let contrast = 2.0 * sa * sb / (va + vb);
    let structure = cov / (sa * sb);
    Ok(luminance * contrast * structure)
}

/// Bin index over [min, max] with the top edge clamped into the last bin.
fn bin_index(x: f64, min: f64, width: f64, bins: usize) -> usize {
    if width == 0.0 {
        return 0;
    }
    (((x - min) / width) as usize).min(bins - 1)
}

/// Plug-in mutual information in nats from a `bins`×`bins` joint histogram
/// over each signal's observed range. Nonnegative; tiny negative rounding
/// is clamped to zero.
pub fn mutual_information(a: &SignalBuffer, b: &SignalBuffer, bins: usize) -> Result<f64> {
    check_equal_len(a, b)?;
    if bins < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 bins, got {bins}"
        )));
    }
    let range = |x: &[f64]| {
        let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (min, (max - min) / bins as f64)
    };
    let (amin, awidth) = range(&a.samples);
    let (bmin, bwidth) = range(&b.samples);

    let mut joint = vec![0u64; bins * bins];
    for (x, y) in a.samples.iter().zip(&b.samples) {
        let i = bin_index(*x, amin, awidth, bins);
        let j = bin_index(*y, bmin, bwidth, bins);
        joint[i * bins + j] += 1;
    }
    let n = a.len() as f64;
    let mut pa = vec![0.0; bins];
    let mut pb = vec![0.0; bins];
    for i in 0..bins {
        for j in 0..bins {
            let p = joint[i * bins + j] as f64 / n;
            pa[i] += p;
            pb[j] += p;
        }
    }
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let p = joint[i * bins + j] as f64 / n;
            if p > 0.0 {
                mi += p * (p / (pa[i] * pb[j])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Default number of histogram bins for `mutual_information`.
pub const DEFAULT_MI_BINS: usize = 64;

/// Segment length for `psd` (50% overlap, Hann taper).
pub const PSD_SEGMENT_LEN: usize = 256;

/// One-sided averaged-periodogram power spectral density.
///
/// The signal mean is removed once globally, then 256-sample segments at
/// 50% overlap are Hann-tapered and averaged. Returned as (frequency Hz,
/// density in power per Hz); integrating over frequency recovers the
/// signal variance up to estimator bias.
pub fn psd(a: &SignalBuffer) -> Result<Vec<(f64, f64)>> {
    let n = a.len();
    let seg = PSD_SEGMENT_LEN;
    if n < seg {
        return Err(Error::InvalidParameter(format!(
            "need at least {seg} samples for a spectral estimate, got {n}"
        )));
    }
    let hop = seg / 2;
    let mu = mean(&a.samples);
    let window: Vec<f64> = (0..seg)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg as f64).cos())
        .collect();
    let win_power: f64 = window.iter().map(|w| w * w).sum();

    let fft = FftPlanner::new().plan_fft_forward(seg);
    let n_segments = (n - seg) / hop + 1;
    let mut acc = vec![0.0; seg / 2 + 1];
    let mut buf = vec![Complex::new(0.0, 0.0); seg];
    for s in 0..n_segments {
        let start = s * hop;
        for i in 0..seg {
            buf[i] = Complex::new((a.samples[start + i] - mu) * window[i], 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += buf[k].norm_sqr();
        }
    }
    let scale = 1.0 / (a.fs * win_power * n_segments as f64);
    Ok(acc
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            let one_sided = if k == 0 || k == seg / 2 { 1.0 } else { 2.0 };
            (k as f64 * a.fs / seg as f64, p * scale * one_sided)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn buf(samples: Vec<f64>) -> SignalBuffer {
        SignalBuffer { samples, fs: 250.0 }
    }

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn cc_identities() {
        let x = buf(noise(500, 1));
        let neg = buf(x.samples.iter().map(|v| -v).collect());
        assert!((correlation_coefficient(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        assert!((correlation_coefficient(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cc_rejects_constant() {
        let x = buf(vec![1.0; 10]);
        let y = buf(noise(10, 2));
        match correlation_coefficient(&x, &y) {
            Err(Error::ConstantInput(_)) => {}
            other => panic!("expected constant-input error, got {other:?}"),
        }
    }

    #[test]
    fn ssim_identities() {
        let x = buf(noise(400, 3).iter().map(|v| v + 2.0).collect());
        assert!((ssim_1d(&x, &x).unwrap() - 1.0).abs() < 1e-12);

        let doubled = buf(x.samples.iter().map(|v| 2.0 * v).collect());
        let got = ssim_1d(&x, &doubled).unwrap();
        assert!(
            (got - 16.0 / 25.0).abs() < 1e-12,
            "ssim(x, 2x) = {got}, want 16/25"
        );
    }

    #[test]
    fn ssim_rejects_zero_std() {
        let x = buf(vec![3.0; 20]);
        let y = buf(noise(20, 4));
        assert!(ssim_1d(&x, &y).is_err());
    }

    #[test]
    fn mi_self_equals_marginal_entropy() {
        let x = buf(noise(5000, 5));
        let bins = 64;
        let mi = mutual_information(&x, &x, bins).unwrap();

        // Independent tabulation of the marginal histogram entropy.
        let min = x.samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = x.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = (max - min) / bins as f64;
        let mut counts = vec![0u64; bins];
        for &v in &x.samples {
            counts[(((v - min) / width) as usize).min(bins - 1)] += 1;
        }
        let n = x.len() as f64;
        let h: f64 = counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum();
        assert!((mi - h).abs() < 1e-10, "MI(x,x) = {mi}, H(x) = {h}");
    }

    #[test]
    fn mi_independent_noise_near_zero() {
        let x = buf(noise(100_000, 6));
        let y = buf(noise(100_000, 7));
        let mi = mutual_information(&x, &y, 64).unwrap();
        assert!(mi < 0.05, "independent MI = {mi}");
        assert!(mi >= 0.0);
    }

    #[test]
    fn mi_constant_input_is_zero() {
        let x = buf(vec![1.0; 100]);
        let y = buf(noise(100, 8));
        assert_eq!(mutual_information(&x, &y, 64).unwrap(), 0.0);
    }

    #[test]
    fn mi_validates_bins() {
        let x = buf(noise(32, 9));
        assert!(mutual_information(&x, &x, 1).is_err());
    }

    #[test]
    fn psd_peak_at_tone_frequency() {
        let fs = 250.0;
        let x = SignalBuffer {
            samples: (0..2500)
                .map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / fs).sin())
                .collect(),
            fs,
        };
        let spec = psd(&x).unwrap();
        let peak = spec
            .iter()
            .cloned()
            .fold((0.0, f64::NEG_INFINITY), |best, cur| {
                if cur.1 > best.1 {
                    cur
                } else {
                    best
                }
            });
        let bin_width = fs / PSD_SEGMENT_LEN as f64;
        assert!(
            (peak.0 - 10.0).abs() <= bin_width + 1e-9,
            "peak at {} Hz",
            peak.0
        );
    }

    #[test]
    fn psd_white_noise_is_flat() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let x = SignalBuffer {
            samples: (0..100_000)
                .map(|_| {
                    // Box-Muller keeps this free of distribution helpers.
                    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
                    let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    (-2.0 * u.ln()).sqrt() * v.cos()
                })
                .collect(),
            fs: 250.0,
        };
        let spec = psd(&x).unwrap();
        let max = spec.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let min = spec.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert!(max / min < 10.0, "flatness ratio {}", max / min);
    }

    #[test]
    fn psd_parseval_consistency() {
        let x = buf(noise(10_000, 11));
        let spec = psd(&x).unwrap();
        let df = 250.0 / PSD_SEGMENT_LEN as f64;
        let integral: f64 = spec.iter().map(|p| p.1 * df).sum();
        let mu = x.samples.iter().sum::<f64>() / x.len() as f64;
        let var = x.samples.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / x.len() as f64;
        assert!(
            (integral - var).abs() / var < 0.10,
            "integral {integral} vs variance {var}"
        );
    }

    #[test]
    fn psd_rejects_short_input() {
        let x = buf(vec![0.0; 255]);
        assert!(psd(&x).is_err());
    }

    proptest! {
        #[test]
        fn cc_and_ssim_symmetric(seed in 0u64..500) {
            let a = buf(noise(300, seed).iter().map(|v| v + 1.5).collect());
            let b = buf(noise(300, seed + 1000).iter().map(|v| v + 1.5).collect());
            let cc_ab = correlation_coefficient(&a, &b).unwrap();
            let cc_ba = correlation_coefficient(&b, &a).unwrap();
            prop_assert!((cc_ab - cc_ba).abs() < 1e-12);
            let ss_ab = ssim_1d(&a, &b).unwrap();
            let ss_ba = ssim_1d(&b, &a).unwrap();
            prop_assert!((ss_ab - ss_ba).abs() < 1e-12);
        }

        #[test]
        fn cc_affine_invariant(
            seed in 0u64..500,
            scale in 0.1f64..10.0,
            offset in -5.0f64..5.0,
        ) {
            let a = buf(noise(300, seed));
            let b = buf(noise(300, seed + 1000));
            let scaled = buf(a.samples.iter().map(|v| scale * v + offset).collect());
            let base = correlation_coefficient(&a, &b).unwrap();
            let moved = correlation_coefficient(&scaled, &b).unwrap();
            prop_assert!((base - moved).abs() < 1e-9);
        }

        #[test]
        fn mi_symmetric_and_nonnegative(seed in 0u64..300) {
            let a = buf(noise(2000, seed));
            let b = buf(noise(2000, seed + 7777));
            let ab = mutual_information(&a, &b, 32).unwrap();
            let ba = mutual_information(&b, &a, 32).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn cc_bounded(seed in 0u64..500) {
            let a = buf(noise(200, seed));
            let b = buf(noise(200, seed * 31 + 1));
            let cc = correlation_coefficient(&a, &b).unwrap();
            prop_assert!(cc.abs() <= 1.0 + 1e-12);
        }
    }
}
