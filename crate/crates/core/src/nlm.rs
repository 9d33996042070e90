//! One-dimensional non-local means for subband coefficient vectors, plus
//! the signal-to-artifact ratio used to score corrections.
//!
//! Each output sample is a weighted average of the samples in a search
//! window around it; weights decay with the squared distance between the
//! patches centered on the two samples, so samples in structurally similar
//! neighborhoods contribute more. The bandwidth sets how fast that decay
//! is, and is the quantity the swarm optimizers tune per subband.

use crate::error::{Error, Result};
use crate::wavelet::SubbandSet;

/// Default patch half-width (samples on each side of the center).
pub const DEFAULT_PATCH_HALF_WIDTH: usize = 4;
/// Default search half-width. Larger windows cost proportionally more time
/// for little quality gain on 10 s subbands.
pub const DEFAULT_SEARCH_HALF_WIDTH: usize = 50;

/// Parameters of one non-local-means pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlmParams {
    /// Patch half-width P; the patch covers 2P+1 samples.
    pub patch_half_width: usize,
    /// Search half-width M; candidates are drawn from 2M+1 samples.
    pub search_half_width: usize,
    /// Weight bandwidth λ.
    pub bandwidth: f64,
}

impl NlmParams {
    pub fn new(patch_half_width: usize, search_half_width: usize, bandwidth: f64) -> Result<Self> {
        if patch_half_width < 1 {
            return Err(Error::InvalidParameter(
                "patch half-width must be at least 1".into(),
            ));
        }
        if search_half_width < patch_half_width {
            return Err(Error::InvalidParameter(format!(
                "search half-width {search_half_width} smaller than patch half-width {patch_half_width}"
            )));
        }
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "bandwidth must be positive and finite, got {bandwidth}"
            )));
        }
        Ok(Self {
            patch_half_width,
            search_half_width,
            bandwidth,
        })
    }

    /// Default patch and search widths with the given bandwidth.
    pub fn with_bandwidth(bandwidth: f64) -> Result<Self> {
        Self::new(DEFAULT_PATCH_HALF_WIDTH, DEFAULT_SEARCH_HALF_WIDTH, bandwidth)
    }
}

/// Whole-sample reflection: index -1 maps to 1, index n maps to n-2.
#[inline]
fn mirror(idx: isize, n: usize) -> usize {
    let n = n as isize;
    let m = if idx < 0 {
        -idx
    } else if idx >= n {
        2 * (n - 1) - idx
    } else {
        idx
    };
    debug_assert!((0..n).contains(&m));
    m as usize
}

/// Denoises `v` by patch-weighted averaging over a truncated search window.
///
/// For each sample s the candidates η are the in-range samples within
/// `search_half_width` of s. Each candidate's weight is
/// exp(-d²(s,η) / (2·(2P+1)·λ²)) where d² sums squared differences over the
/// 2P+1 patch offsets, with out-of-range patch samples mirrored. Weights are
/// normalized to sum to one, so the output is a convex combination of window
/// samples. Exponents are max-shifted before exponentiation so small
/// bandwidths cannot underflow every weight.
pub fn nlm_denoise(v: &[f64], params: &NlmParams) -> Result<Vec<f64>> {
    let p = params.patch_half_width;
    let m = params.search_half_width;
    if v.len() <= 2 * p + 1 {
        return Err(Error::InvalidParameter(format!(
            "input length {} must exceed the patch width {}",
            v.len(),
            2 * p + 1
        )));
    }
    let n = v.len();
    let patch_len = (2 * p + 1) as f64;
    let denom = 2.0 * patch_len * params.bandwidth * params.bandwidth;

    let mut out = vec![0.0; n];
    let mut exponents: Vec<f64> = Vec::with_capacity(2 * m + 1);
    for s in 0..n {
        let lo = s.saturating_sub(m);
        let hi = (s + m).min(n - 1);
        exponents.clear();
        let mut max_exp = f64::NEG_INFINITY;
        for eta in lo..=hi {
            let mut d2 = 0.0;
            for delta in -(p as isize)..=(p as isize) {
                let a = v[mirror(s as isize + delta, n)];
                let b = v[mirror(eta as isize + delta, n)];
                d2 += (a - b) * (a - b);
            }
            let e = -d2 / denom;
            if e > max_exp {
                max_exp = e;
            }
            exponents.push(e);
        }
        let mut z = 0.0;
        let mut acc = 0.0;
        for (eta, &e) in (lo..=hi).zip(exponents.iter()) {
            let w = (e - max_exp).exp();
            z += w;
            acc += w * v[eta];
        }
        out[s] = acc / z;
    }
    Ok(out)
}

/// Signal-to-artifact ratio in dB: 10·log10(std(d) / std(d - d_hat)),
/// population standard deviations.
///
/// Unbounded as the correction approaches a no-op, which is why callers
/// that use it as an optimization target must cap or reframe it.
pub fn sar(d: &[f64], d_hat: &[f64]) -> Result<f64> {
    if d.len() != d_hat.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} vs {}",
            d.len(),
            d_hat.len()
        )));
    }
    if d.is_empty() {
        return Err(Error::InvalidParameter("empty input".into()));
    }
    let std_d = population_std(d);
    let residual: Vec<f64> = d.iter().zip(d_hat).map(|(a, b)| a - b).collect();
    let std_r = population_std(&residual);
    if std_r == 0.0 {
        return Err(Error::DegenerateResidual(
            "correction equals input; ratio is unbounded".into(),
        ));
    }
    Ok(10.0 * (std_d / std_r).log10())
}

fn population_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Applies `nlm_denoise` to every node of a subband set with a per-node
/// bandwidth; structure and metadata are unchanged.
pub fn correct_subbands(
    s: &SubbandSet,
    patch_half_width: usize,
    search_half_width: usize,
    lambdas: &[f64],
) -> Result<SubbandSet> {
    if lambdas.len() != s.nodes.len() {
        return Err(Error::InvalidParameter(format!(
            "{} bandwidths for {} nodes",
            lambdas.len(),
            s.nodes.len()
        )));
    }
    let mut out = s.clone();
    for (node, &lambda) in out.nodes.iter_mut().zip(lambdas) {
        let params = NlmParams::new(patch_half_width, search_half_width, lambda)?;
        *node = nlm_denoise(node, &params)?;
    }
    Ok(out)
}
