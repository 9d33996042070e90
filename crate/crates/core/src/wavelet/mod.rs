//! Wavelet packet decomposition and reconstruction over an embedded
//! database of orthogonal filters, plus data-driven wavelet and level
//! selection.

mod filters;

use crate::error::{Error, Result};
use crate::signal::SignalBuffer;
use std::sync::OnceLock;

/// An orthogonal analysis filter pair. `lowpass` is the stored table entry;
/// `highpass` is its quadrature mirror.
#[derive(Debug, Clone)]
pub struct WaveletFilter {
    pub name: &'static str,
    pub lowpass: Vec<f64>,
    pub highpass: Vec<f64>,
}

impl WaveletFilter {
    pub fn len(&self) -> usize {
        self.lowpass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lowpass.is_empty()
    }
}

fn mirror_highpass(g: &[f64]) -> Vec<f64> {
    let l = g.len();
    (0..l)
        .map(|k| if k % 2 == 0 { g[l - 1 - k] } else { -g[l - 1 - k] })
        .collect()
}

fn validate_filter(f: &WaveletFilter) {
    let g = &f.lowpass;
    let sum: f64 = g.iter().sum();
    assert!(
        (sum - std::f64::consts::SQRT_2).abs() < 1e-8,
        "{}: coefficient sum {} != sqrt(2)",
        f.name,
        sum
    );
    let norm: f64 = g.iter().map(|v| v * v).sum();
    assert!(
        (norm - 1.0).abs() < 1e-8,
        "{}: squared norm {} != 1",
        f.name,
        norm
    );
    for m in 1..g.len() / 2 {
        let dot: f64 = (0..g.len() - 2 * m).map(|k| g[k] * g[k + 2 * m]).sum();
        assert!(
            dot.abs() < 1e-8,
            "{}: double-shift orthogonality violated at shift {}: {}",
            f.name,
            m,
            dot
        );
    }
    for (k, &h) in f.highpass.iter().enumerate() {
        let expect = if k % 2 == 0 {
            g[g.len() - 1 - k]
        } else {
            -g[g.len() - 1 - k]
        };
        assert!(
            (h - expect).abs() < 1e-12,
            "{}: mirror relation violated at {}",
            f.name,
            k
        );
    }
}

fn database() -> &'static Vec<WaveletFilter> {
    static DB: OnceLock<Vec<WaveletFilter>> = OnceLock::new();
    DB.get_or_init(|| {
        filters::FILTER_TABLE
            .iter()
            .map(|(name, g)| {
                let f = WaveletFilter {
                    name,
                    lowpass: g.to_vec(),
                    highpass: mirror_highpass(g),
                };
                validate_filter(&f);
                f
            })
            .collect()
    })
}

/// Names of every embedded filter, in database order.
pub fn filter_names() -> Vec<&'static str> {
    database().iter().map(|f| f.name).collect()
}

/// Looks up a filter by name (e.g. "fk6", "db4").
pub fn get_filter(name: &str) -> Result<&'static WaveletFilter> {
    database()
        .iter()
        .find(|f| f.name == name)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "unknown wavelet '{name}'; valid names: {}",
                filter_names().join(", ")
            ))
        })
}

/// All embedded filters, in database order.
pub fn all_filters() -> &'static [WaveletFilter] {
    database()
}

/// A complete wavelet packet decomposition at one level. Nodes are stored in
/// binary filter-path order: the children of node p at the previous level
/// are node 2p (highpass branch) and node 2p+1 (lowpass branch), so the
/// final node is the all-lowpass approximation.
#[derive(Debug, Clone)]
pub struct SubbandSet {
    pub level: usize,
    pub nodes: Vec<Vec<f64>>,
    pub original_length: usize,
    pub filter_name: String,
    pub fs: f64,
}

impl SubbandSet {
    pub fn node_len(&self) -> usize {
        self.nodes.first().map_or(0, Vec::len)
    }
}

/// child[t] = sum_k filt[k] * parent[(2t - k) mod n]
fn analysis_step(parent: &[f64], filt: &[f64]) -> Vec<f64> {
    let n = parent.len();
    let half = n / 2;
    let mut out = vec![0.0; half];
    for (t, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &c) in filt.iter().enumerate() {
            let idx = (2 * t + n - (k % n)) % n;
            acc += c * parent[idx];
        }
        *o = acc;
    }
    out
}

/// Transpose of `analysis_step`: scatter each child coefficient back
/// through the filter taps. Summing the lowpass and highpass scatters
/// reconstructs the parent exactly (orthogonality).
fn synthesis_step(child: &[f64], filt: &[f64], parent_len: usize) -> Vec<f64> {
    let n = parent_len;
    let mut parent = vec![0.0; n];
    for (t, &c) in child.iter().enumerate() {
        for (k, &f) in filt.iter().enumerate() {
            let idx = (2 * t + n - (k % n)) % n;
            parent[idx] += f * c;
        }
    }
    parent
}

/// Splits `x` into 2^level subband nodes with periodic boundary handling.
/// Inputs whose length is not a multiple of 2^level are right-padded with a
/// periodic wrap; the original length is recorded and restored on
/// reconstruction.
pub fn wpd_decompose(x: &SignalBuffer, filter: &WaveletFilter, level: usize) -> Result<SubbandSet> {
    if x.len() < filter.len() {
        return Err(Error::InvalidParameter(format!(
            "signal length {} shorter than filter {} ({} taps)",
            x.len(),
            filter.name,
            filter.len()
        )));
    }
    let block = 1usize << level;
    let padded_len = x.len().div_ceil(block) * block;
    if padded_len / block < filter.len() {
        return Err(Error::DecompositionDepth(format!(
            "level {level} leaves nodes of {} samples, shorter than filter {} ({} taps)",
            padded_len / block,
            filter.name,
            filter.len()
        )));
    }
    let mut padded = x.samples.clone();
    for i in 0..padded_len - x.len() {
        padded.push(x.samples[i % x.len()]);
    }

    let mut nodes = vec![padded];
    for _ in 0..level {
        let mut next = Vec::with_capacity(nodes.len() * 2);
        for parent in &nodes {
            next.push(analysis_step(parent, &filter.highpass));
            next.push(analysis_step(parent, &filter.lowpass));
        }
        nodes = next;
    }
    Ok(SubbandSet {
        level,
        nodes,
        original_length: x.len(),
        filter_name: filter.name.to_string(),
        fs: x.fs,
    })
}

/// Inverse of `wpd_decompose`; returns the signal truncated to the original
/// length recorded in the set.
pub fn wpd_reconstruct(s: &SubbandSet, filter: &WaveletFilter) -> Result<SignalBuffer> {
    if s.nodes.is_empty() || s.nodes.len() != (1usize << s.level) {
        return Err(Error::Structure(format!(
            "expected {} nodes for level {}, found {}",
            1usize << s.level,
            s.level,
            s.nodes.len()
        )));
    }
    let node_len = s.node_len();
    if s.nodes.iter().any(|n| n.len() != node_len) {
        return Err(Error::Structure("nodes have unequal lengths".into()));
    }
    let mut current: Vec<Vec<f64>> = s.nodes.clone();
    while current.len() > 1 {
        let parent_len = 2 * current[0].len();
        let mut next = Vec::with_capacity(current.len() / 2);
        for pair in current.chunks(2) {
            let hi = synthesis_step(&pair[0], &filter.highpass, parent_len);
            let lo = synthesis_step(&pair[1], &filter.lowpass, parent_len);
            next.push(hi.iter().zip(&lo).map(|(a, b)| a + b).collect());
        }
        current = next;
    }
    let mut samples = current.pop().unwrap();
    samples.truncate(s.original_length);
    Ok(SignalBuffer { samples, fs: s.fs })
}

/// Root-mean-square residual of a decompose/reconstruct round trip.
pub fn reconstruction_error(x: &SignalBuffer, filter: &WaveletFilter, level: usize) -> Result<f64> {
    let recon = wpd_reconstruct(&wpd_decompose(x, filter, level)?, filter)?;
    let mse = x
        .samples
        .iter()
        .zip(&recon.samples)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    Ok(mse.sqrt())
}

/// Returns the candidate with the smallest mean reconstruction error across
/// the given signals. Ties keep the earlier candidate.
pub fn select_wavelet(
    signals: &[SignalBuffer],
    candidates: &[&WaveletFilter],
    level: usize,
) -> Result<&'static str> {
    if signals.is_empty() || candidates.is_empty() {
        return Err(Error::InvalidParameter(
            "wavelet selection needs at least one signal and one candidate".into(),
        ));
    }
    let mut best: Option<(&'static str, f64)> = None;
    for cand in candidates {
        let mut total = 0.0;
        for s in signals {
            total += reconstruction_error(s, cand, level)?;
        }
        let mean = total / signals.len() as f64;
        if best.map_or(true, |(_, b)| mean < b) {
            best = Some((cand.name, mean));
        }
    }
    Ok(best.unwrap().0)
}

/// Non-normalized Shannon entropy of a coefficient vector:
/// SE = sum_k E_k ln(E_k) with E_k = c(k)^2; zero coefficients contribute 0.
pub fn subband_entropy(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .map(|&c| {
            let e = c * c;
            if e > 0.0 {
                e * e.ln()
            } else {
                0.0
            }
        })
        .sum()
}

/// Walks the iterated approximation path, splitting once per level, and
/// returns the smallest level at which the approximation branch has lower
/// entropy than its sibling detail branch; `max_level` when none qualifies.
pub fn select_level(x: &SignalBuffer, filter: &WaveletFilter, max_level: usize) -> Result<usize> {
    if max_level < 1 {
        return Err(Error::InvalidParameter("max_level must be at least 1".into()));
    }
    let mut approx = x.samples.clone();
    for level in 1..=max_level {
        if approx.len() < 2 {
            break;
        }
        if approx.len() % 2 == 1 {
            approx.push(approx[0]); // periodic wrap keeps the split even
        }
        let detail = analysis_step(&approx, &filter.highpass);
        approx = analysis_step(&approx, &filter.lowpass);
        if subband_entropy(&approx) < subband_entropy(&detail) {
            return Ok(level);
        }
    }
    Ok(max_level)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn buf(samples: Vec<f64>) -> SignalBuffer {
        SignalBuffer { samples, fs: 250.0 }
    }

    fn rand_signal(n: usize, state: &mut u64) -> Vec<f64> {
        // splitmix64: deterministic, dependency-free test data
        (0..n)
            .map(|_| {
                *state = state.wrapping_add(0x9E3779B97F4A7C15);
                let mut z = *state;
                z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
                z ^= z >> 31;
                (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn database_loads_and_validates() {
        let names = filter_names();
        assert_eq!(names.len(), 30);
        assert!(names.contains(&"haar"));
        assert!(names.contains(&"fk6"));
        assert!(names.contains(&"coif5"));
        assert!(get_filter("nope").is_err());
    }

    #[test]
    fn level_zero_is_identity() {
        let x = buf(vec![1.0, -2.0, 3.0, 0.5]);
        let f = get_filter("haar").unwrap();
        let s = wpd_decompose(&x, f, 0).unwrap();
        assert_eq!(s.nodes.len(), 1);
        assert_eq!(s.nodes[0], x.samples);
    }

    #[test]
    fn constant_signal_haar_level_one() {
        let c = 3.25;
        let x = buf(vec![c; 8]);
        let f = get_filter("haar").unwrap();
        let s = wpd_decompose(&x, f, 1).unwrap();
        // node 0: highpass branch (differences), node 1: lowpass branch
        for v in &s.nodes[0] {
            assert!(v.abs() < 1e-12);
        }
        for v in &s.nodes[1] {
            assert!((v - c * std::f64::consts::SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn db2_level2_matches_convolution_oracle() {
        let mut st = 42u64;
        let x = rand_signal(16, &mut st);
        let f = get_filter("db2").unwrap();
        let s = wpd_decompose(&buf(x.clone()), f, 2).unwrap();

        // Brute-force oracle: explicit periodic convolution + downsample.
        let conv_down = |parent: &[f64], filt: &[f64]| -> Vec<f64> {
            let n = parent.len();
            (0..n / 2)
                .map(|t| {
                    (0..filt.len())
                        .map(|k| filt[k] * parent[(2 * t + n - k % n) % n])
                        .sum()
                })
                .collect()
        };
        let l1h = conv_down(&x, &f.highpass);
        let l1g = conv_down(&x, &f.lowpass);
        let expect = [
            conv_down(&l1h, &f.highpass),
            conv_down(&l1h, &f.lowpass),
            conv_down(&l1g, &f.highpass),
            conv_down(&l1g, &f.lowpass),
        ];
        for (node, exp) in s.nodes.iter().zip(expect.iter()) {
            for (a, b) in node.iter().zip(exp) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfect_reconstruction_all_filters() {
        let mut st = 7u64;
        let x = buf(rand_signal(1024, &mut st));
        for f in all_filters() {
            let err = reconstruction_error(&x, f, 3).unwrap();
            assert!(err < 1e-10, "{}: reconstruction error {err}", f.name);
        }
    }

    #[test]
    fn perfect_reconstruction_odd_length() {
        let mut st = 11u64;
        let x = buf(rand_signal(999, &mut st));
        let f = get_filter("fk6").unwrap();
        let err = reconstruction_error(&x, f, 3).unwrap();
        assert!(err < 1e-10, "odd-length reconstruction error {err}");
    }

    #[test]
    fn zero_subbands_reconstruct_to_zero() {
        let mut st = 3u64;
        let x = buf(rand_signal(64, &mut st));
        let f = get_filter("db4").unwrap();
        let mut s = wpd_decompose(&x, f, 2).unwrap();
        for node in &mut s.nodes {
            node.iter_mut().for_each(|v| *v = 0.0);
        }
        let y = wpd_reconstruct(&s, f).unwrap();
        assert!(y.samples.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn lowfreq_tone_concentrates_in_approximation_node() {
        let fs = 250.0;
        let n = 2048;
        let x = SignalBuffer {
            samples: (0..n)
                .map(|i| (2.0 * std::f64::consts::PI * 2.0 * i as f64 / fs).sin())
                .collect(),
            fs,
        };
        let f = get_filter("fk6").unwrap();
        let mut s = wpd_decompose(&x, f, 3).unwrap();
        let last = s.nodes.len() - 1;
        for (j, node) in s.nodes.iter_mut().enumerate() {
            if j != last {
                node.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let y = wpd_reconstruct(&s, f).unwrap();
        let energy = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        let kept = energy(&y.samples) / energy(&x.samples);
        assert!(kept >= 0.95, "approximation node kept only {kept} of energy");
    }

    #[test]
    fn energy_is_conserved() {
        let mut st = 5u64;
        let x = buf(rand_signal(256, &mut st));
        let f = get_filter("sym5").unwrap();
        let s = wpd_decompose(&x, f, 3).unwrap();
        let node_energy: f64 = s.nodes.iter().flatten().map(|v| v * v).sum();
        let sig_energy: f64 = x.samples.iter().map(|v| v * v).sum();
        assert!((node_energy - sig_energy).abs() / sig_energy < 1e-9);
    }

    #[test]
    fn depth_error_when_nodes_too_short() {
        let mut st = 9u64;
        let x = buf(rand_signal(64, &mut st));
        let f = get_filter("coif5").unwrap(); // 30 taps
        match wpd_decompose(&x, f, 2) {
            Err(Error::DecompositionDepth(_)) => {}
            other => panic!("expected depth error, got {other:?}"),
        }
    }

    #[test]
    fn recursion_consistency_one_more_level() {
        let mut st = 13u64;
        let x = buf(rand_signal(128, &mut st));
        let f = get_filter("db3").unwrap();
        let s2 = wpd_decompose(&x, f, 2).unwrap();
        let s3 = wpd_decompose(&x, f, 3).unwrap();
        for (p, parent) in s2.nodes.iter().enumerate() {
            let hi = analysis_step(parent, &f.highpass);
            let lo = analysis_step(parent, &f.lowpass);
            for (a, b) in hi.iter().zip(&s3.nodes[2 * p]) {
                assert!((a - b).abs() < 1e-12);
            }
            for (a, b) in lo.iter().zip(&s3.nodes[2 * p + 1]) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn entropy_matches_loop_oracle() {
        let mut st = 17u64;
        let v = rand_signal(64, &mut st);
        let mut expect = 0.0;
        for &c in &v {
            let e = c * c;
            if e > 0.0 {
                expect += e * e.ln();
            }
        }
        assert!((subband_entropy(&v) - expect).abs() < 1e-12);
    }

    #[test]
    fn entropy_closed_forms() {
        assert_eq!(subband_entropy(&[0.0, 0.0]), 0.0);
        let c = std::f64::consts::E.sqrt();
        let se = subband_entropy(&[c]);
        assert!((se - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn select_wavelet_singleton_and_argmin() {
        let mut st = 19u64;
        let sigs = vec![buf(rand_signal(256, &mut st))];
        let fk6 = get_filter("fk6").unwrap();
        let haar = get_filter("haar").unwrap();
        assert_eq!(select_wavelet(&sigs, &[fk6], 3).unwrap(), "fk6");
        let winner = select_wavelet(&sigs, &[haar, fk6], 3).unwrap();
        let e_h = reconstruction_error(&sigs[0], haar, 3).unwrap();
        let e_f = reconstruction_error(&sigs[0], fk6, 3).unwrap();
        assert_eq!(winner, if e_f < e_h { "fk6" } else { "haar" });
    }

    #[test]
    fn select_level_engineered_level_one() {
        // Nyquist-rate alternation: all energy in the detail branch, so the
        // approximation entropy drops below the detail entropy immediately.
        let x = buf((0..256).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect());
        let f = get_filter("haar").unwrap();
        assert_eq!(select_level(&x, f, 5).unwrap(), 1);
    }

    #[test]
    fn select_level_matches_tabulation() {
        let mut st = 23u64;
        let x = buf(rand_signal(2500, &mut st));
        let f = get_filter("fk6").unwrap();
        let picked = select_level(&x, f, 5).unwrap();

        // Oracle: tabulate the iterated-split entropies explicitly.
        let mut approx = x.samples.clone();
        let mut oracle = 5;
        for level in 1..=5 {
            if approx.len() % 2 == 1 {
                approx.push(approx[0]);
            }
            let detail = analysis_step(&approx, &f.highpass);
            approx = analysis_step(&approx, &f.lowpass);
            if subband_entropy(&approx) < subband_entropy(&detail) {
                oracle = level;
                break;
            }
        }
        assert_eq!(picked, oracle);
    }
}
