//! Segment labeling: three summary features (variance, energy entropy,
//! peak-to-peak) and a small linear SVM trained from scratch by sequential
//! minimal optimization, with a stratified cross-validation harness.

use crate::error::{Error, Result};
use crate::signal::{Label, Segment};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Summary statistics of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub variance: f64,
    pub shannon_entropy: f64,
    pub peak_to_peak: f64,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 3] {
        [self.variance, self.shannon_entropy, self.peak_to_peak]
    }

    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        // Shifted two-pass variance: anchoring on the first sample keeps a
        // constant input at exactly zero instead of mean-rounding residue.
        let anchor = samples[0];
        let mean = samples.iter().map(|v| v - anchor).sum::<f64>() / n;
        let variance = samples
            .iter()
            .map(|v| {
                let d = (v - anchor) - mean;
                d * d
            })
            .sum::<f64>()
            / n;
        // Energy entropy, same convention as the subband selection rule:
        // sum of e·ln(e) over per-sample energies e = x², zeros contribute 0.
        let shannon_entropy = samples
            .iter()
            .map(|&v| {
                let e = v * v;
                if e > 0.0 {
                    e * e.ln()
                } else {
                    0.0
                }
            })
            .sum();
        let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            variance,
            shannon_entropy,
            peak_to_peak: max - min,
        }
    }
}

/// Feature statistics of one segment.
pub fn extract_features(seg: &Segment) -> FeatureVector {
    FeatureVector::from_samples(&seg.buffer.samples)
}

/// A trained linear separator over standardized features. The decision for
/// a raw feature vector x is w·z + b with z = (x - means) / stds; positive
/// means corrupted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub weights: [f64; 3],
    pub bias: f64,
    pub feature_means: [f64; 3],
    pub feature_stds: [f64; 3],
    #[serde(rename = "C")]
    pub c: f64,
    pub version: u32,
}

/// Model persistence format version.
pub const MODEL_VERSION: u32 = 1;

impl SvmModel {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: SvmModel =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        if model.version != MODEL_VERSION {
            return Err(Error::Format(format!(
                "unsupported model version {} (expected {MODEL_VERSION})",
                model.version
            )));
        }
        if model.feature_stds.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::Format(
                "feature standard deviations must be positive".into(),
            ));
        }
        if model
            .weights
            .iter()
            .chain([model.bias, model.c].iter())
            .chain(model.feature_means.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::Format("model parameters must be finite".into()));
        }
        Ok(model)
    }

    fn standardize(&self, f: &FeatureVector) -> [f64; 3] {
        let raw = f.as_array();
        let mut z = [0.0; 3];
        for k in 0..3 {
            z[k] = (raw[k] - self.feature_means[k]) / self.feature_stds[k];
        }
        z
    }
}

/// Raw decision value w·z + b for a feature vector; positive → corrupted.
pub fn decision_value(model: &SvmModel, features: &FeatureVector) -> f64 {
    let z = model.standardize(features);
    model.weights.iter().zip(&z).map(|(w, v)| w * v).sum::<f64>() + model.bias
}

/// Labels a segment with the trained separator.
pub fn classify(model: &SvmModel, seg: &Segment) -> Label {
    if decision_value(model, &extract_features(seg)) > 0.0 {
        Label::Corrupted
    } else {
        Label::Clean
    }
}

/// Aggregated two-class performance; corrupted is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub true_positive: u64,
    pub false_positive: u64,
    pub true_negative: u64,
    pub false_negative: u64,
}

impl ClassifierReport {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fnn: u64) -> Self {
        let pct = |num: u64, den: u64| {
            if den == 0 {
                f64::NAN
            } else {
                100.0 * num as f64 / den as f64
            }
        };
        Self {
            sensitivity: pct(tp, tp + fnn),
            specificity: pct(tn, tn + fp),
            accuracy: pct(tp + tn, tp + tn + fp + fnn),
            true_positive: tp,
            false_positive: fp,
            true_negative: tn,
            false_negative: fnn,
        }
    }
}

fn signed_labels(labels: &[Label]) -> Result<Vec<f64>> {
    labels
        .iter()
        .map(|l| match l {
            Label::Corrupted => Ok(1.0),
            Label::Clean => Ok(-1.0),
            Label::Unknown => Err(Error::Training(
                "training labels must be corrupted or clean".into(),
            )),
        })
        .collect()
}

/// Fixed seed for the trainer's candidate-pair draws, so training is a
/// deterministic function of its inputs.
const SMO_SEED: u64 = 0x51ED;
const SMO_TOLERANCE: f64 = 1e-3;

fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

struct SmoState<'a> {
    z: &'a [[f64; 3]],
    y: &'a [f64],
    c: f64,
    alphas: Vec<f64>,
    w: [f64; 3],
    b: f64,
}

impl SmoState<'_> {
    fn error(&self, k: usize) -> f64 {
        dot3(&self.w, &self.z[k]) + self.b - self.y[k]
    }

    /// Joint analytic step on the pair (i, j). Returns false when the pair
    /// cannot move (coincident box corner, non-negative curvature, or a
    /// below-threshold step).
    fn try_step(&mut self, i: usize, j: usize, e_i: f64) -> bool {
        let (z, y, c) = (self.z, self.y, self.c);
        let e_j = self.error(j);
        let (alpha_i_old, alpha_j_old) = (self.alphas[i], self.alphas[j]);
        let (lo, hi) = if y[i] == y[j] {
            (
                (alpha_i_old + alpha_j_old - c).max(0.0),
                (alpha_i_old + alpha_j_old).min(c),
            )
        } else {
            (
                (alpha_j_old - alpha_i_old).max(0.0),
                (c + alpha_j_old - alpha_i_old).min(c),
            )
        };
        if lo >= hi {
            return false;
        }
        let eta = 2.0 * dot3(&z[i], &z[j]) - dot3(&z[i], &z[i]) - dot3(&z[j], &z[j]);
        if eta >= 0.0 {
            return false;
        }
        let alpha_j = (alpha_j_old - y[j] * (e_i - e_j) / eta).clamp(lo, hi);
        if (alpha_j - alpha_j_old).abs() < 1e-5 {
            return false;
        }
        let alpha_i = alpha_i_old + y[i] * y[j] * (alpha_j_old - alpha_j);

        let (di, dj) = (alpha_i - alpha_i_old, alpha_j - alpha_j_old);
        for k in 0..3 {
            self.w[k] += y[i] * di * z[i][k] + y[j] * dj * z[j][k];
        }
        let b1 =
            self.b - e_i - y[i] * di * dot3(&z[i], &z[i]) - y[j] * dj * dot3(&z[i], &z[j]);
        let b2 =
            self.b - e_j - y[i] * di * dot3(&z[i], &z[j]) - y[j] * dj * dot3(&z[j], &z[j]);
        self.b = if alpha_i > 0.0 && alpha_i < c {
            b1
        } else if alpha_j > 0.0 && alpha_j < c {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        self.alphas[i] = alpha_i;
        self.alphas[j] = alpha_j;
        true
    }
}

/// Sequential minimal optimization on standardized features z with labels
/// y in {-1, +1}. Returns (weights, bias, alphas).
///
/// Each sweep visits every multiplier and pairs a tolerance-violating one
/// first with the partner of largest error gap, then, if that pair cannot
/// move, with every other index from a seeded-random starting point. The
/// weight vector is maintained incrementally (linear kernel). A sweep
/// without any successful step means no pair can improve, so the loop
/// stops; a hard cap of 10·n sweeps bounds degenerate inputs such as
/// contradictory labels.
fn smo_train(z: &[[f64; 3]], y: &[f64], c: f64) -> (Vec<f64>, f64, Vec<f64>) {
    let n = z.len();
    let mut state = SmoState {
        z,
        y,
        c,
        alphas: vec![0.0; n],
        w: [0.0; 3],
        b: 0.0,
    };
    let mut rng = ChaCha12Rng::seed_from_u64(SMO_SEED);

    let max_sweeps = 10 * n;
    for _ in 0..max_sweeps {
        let mut changed = 0;
        for i in 0..n {
            let e_i = state.error(i);
            let violates = (y[i] * e_i < -SMO_TOLERANCE && state.alphas[i] < c)
                || (y[i] * e_i > SMO_TOLERANCE && state.alphas[i] > 0.0);
            if !violates {
                continue;
            }
            let mut best_j = usize::MAX;
            let mut best_gap = -1.0;
            for j in 0..n {
                if j != i {
                    let gap = (e_i - state.error(j)).abs();
                    if gap > best_gap {
                        best_gap = gap;
                        best_j = j;
                    }
                }
            }
            let mut stepped = state.try_step(i, best_j, e_i);
            if !stepped {
                let start = rng.gen_range(0..n);
                for off in 0..n {
                    let j = (start + off) % n;
                    if j != i && j != best_j && state.try_step(i, j, e_i) {
                        stepped = true;
                        break;
                    }
                }
            }
            if stepped {
                changed += 1;
            }
        }
        if changed == 0 {
            break;
        }
    }
    (state.w.to_vec(), state.b, state.alphas)
}

/// Trains the linear separator: standardizes the features with the
/// training set's own means and standard deviations, then runs the
/// two-variable solver to the stated tolerance.
pub fn train_svm(features: &[FeatureVector], labels: &[Label], c: f64) -> Result<SvmModel> {
    if features.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("box constraint must be positive".into()));
    }
    let y = signed_labels(labels)?;
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::Training(
            "training set must contain both classes".into(),
        ));
    }

    let n = features.len() as f64;
    let mut means = [0.0; 3];
    let mut stds = [0.0; 3];
    for f in features {
        for (k, v) in f.as_array().iter().enumerate() {
            means[k] += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    for f in features {
        for (k, v) in f.as_array().iter().enumerate() {
            stds[k] += (v - means[k]) * (v - means[k]);
        }
    }
    for (k, s) in stds.iter_mut().enumerate() {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            return Err(Error::Training(format!(
                "feature {k} is constant across the training set"
            )));
        }
    }

    let z: Vec<[f64; 3]> = features
        .iter()
        .map(|f| {
            let raw = f.as_array();
            [
                (raw[0] - means[0]) / stds[0],
                (raw[1] - means[1]) / stds[1],
                (raw[2] - means[2]) / stds[2],
            ]
        })
        .collect();

    let (w, b, _alphas) = smo_train(&z, &y, c);
    Ok(SvmModel {
        weights: [w[0], w[1], w[2]],
        bias: b,
        feature_means: means,
        feature_stds: stds,
        c,
        version: MODEL_VERSION,
    })
}

/// Stratified k-fold evaluation with aggregated confusion counts.
pub fn cross_validate(
    features: &[FeatureVector],
    labels: &[Label],
    folds: usize,
    c: f64,
    seed: u64,
) -> Result<ClassifierReport> {
    if features.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} feature vectors for {} labels",
            features.len(),
            labels.len()
        )));
    }
    if folds < 2 {
        return Err(Error::InvalidParameter("need at least 2 folds".into()));
    }
    let y = signed_labels(labels)?;
    let mut pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > 0.0).collect();
    let mut neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] < 0.0).collect();
    if pos.len() < folds || neg.len() < folds {
        return Err(Error::InvalidParameter(format!(
            "{folds} folds cannot each receive both classes ({} corrupted, {} clean)",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut fold_of = vec![0usize; y.len()];
    for (rank, &i) in pos.iter().enumerate() {
        fold_of[i] = rank % folds;
    }
    for (rank, &i) in neg.iter().enumerate() {
        fold_of[i] = rank % folds;
    }

    let (mut tp, mut fp, mut tn, mut fnn) = (0u64, 0u64, 0u64, 0u64);
    for fold in 0..folds {
        let train_idx: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] != fold).collect();
        let test_idx: Vec<usize> = (0..y.len()).filter(|&i| fold_of[i] == fold).collect();
        let train_features: Vec<FeatureVector> =
            train_idx.iter().map(|&i| features[i]).collect();
        let train_labels: Vec<Label> = train_idx.iter().map(|&i| labels[i]).collect();
        let model = train_svm(&train_features, &train_labels, c)?;
        for &i in &test_idx {
            let predicted_corrupted = decision_value(&model, &features[i]) > 0.0;
            match (y[i] > 0.0, predicted_corrupted) {
                (true, true) => tp += 1,
                (true, false) => fnn += 1,
                (false, false) => tn += 1,
                (false, true) => fp += 1,
            }
        }
    }
    Ok(ClassifierReport::from_counts(tp, fp, tn, fnn))
}
