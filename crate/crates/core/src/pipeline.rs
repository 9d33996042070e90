//! End-to-end orchestration: classify each fixed-length segment, decompose
//! the corrupted ones into wavelet packet subbands, tune one non-local-means
//! bandwidth per subband with a swarm optimizer, correct, reconstruct, and
//! splice clean segments back untouched.

use serde::{Deserialize, Serialize};

use crate::classifier::{classify, SvmModel};
use crate::error::{Error, Result};
use crate::metrics::{
    correlation_coefficient, mutual_information, ssim_1d, ChannelEvaluation, EvaluationReport,
    DEFAULT_MI_BINS,
};
use crate::nlm::{correct_subbands, sar, DEFAULT_PATCH_HALF_WIDTH, DEFAULT_SEARCH_HALF_WIDTH};
use crate::optimizer::{
    evaluate_fitness, optimize, Algorithm, FitnessMode, FitnessSpec, SwarmConfig, FITNESS_CAP_DB,
};
use crate::signal::{segmentize, Label, Recording, Segment, SignalBuffer};
use crate::wavelet::{
    all_filters, get_filter, select_level, select_wavelet, wpd_decompose, wpd_reconstruct,
};

/// Ceiling for data-driven level selection.
pub const MAX_AUTO_LEVEL: usize = 5;

/// Level used to rank candidate wavelets when the level itself is still
/// undecided; the wavelet must be chosen before its level can be.
const PROVISIONAL_SELECTION_LEVEL: usize = 3;

/// Mother wavelet choice: a named filter or data-driven selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum WaveletChoice {
    Auto,
    Named(String),
}

impl From<WaveletChoice> for String {
    fn from(c: WaveletChoice) -> String {
        match c {
            WaveletChoice::Auto => "auto".into(),
            WaveletChoice::Named(name) => name,
        }
    }
}

impl TryFrom<String> for WaveletChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        if s == "auto" {
            Ok(WaveletChoice::Auto)
        } else {
            get_filter(&s)?;
            Ok(WaveletChoice::Named(s))
        }
    }
}

/// Decomposition depth choice: a fixed level or data-driven selection
/// capped at [`MAX_AUTO_LEVEL`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum LevelChoice {
    Auto,
    Fixed(usize),
}

impl From<LevelChoice> for String {
    fn from(c: LevelChoice) -> String {
        match c {
            LevelChoice::Auto => "auto".into(),
            LevelChoice::Fixed(l) => l.to_string(),
        }
    }
}

impl TryFrom<String> for LevelChoice {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        if s == "auto" {
            return Ok(LevelChoice::Auto);
        }
        let level: usize = s
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("level must be \"auto\" or a positive integer, got {s:?}")))?;
        if level == 0 {
            return Err(Error::InvalidParameter("level must be at least 1".into()));
        }
        Ok(LevelChoice::Fixed(level))
    }
}

/// Everything a denoising run needs besides the data and the classifier.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub wavelet: WaveletChoice,
    pub level: LevelChoice,
    pub patch_half_width: usize,
    pub search_half_width: usize,
    /// Optimizer family, budget, and bandwidth box. Its `seed` field is
    /// ignored here: each segment derives its own optimizer seed from
    /// `self.seed`, the channel, and the segment start, so runs are
    /// reproducible while segments stay decorrelated.
    pub swarm: SwarmConfig,
    pub fitness: FitnessMode,
    pub segment_seconds: f64,
    pub mi_bins: usize,
    /// Provenance string for the classifier model (e.g. its file path);
    /// recorded in run artifacts, never used to load anything.
    pub model_reference: Option<String>,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            wavelet: WaveletChoice::Auto,
            level: LevelChoice::Auto,
            patch_half_width: DEFAULT_PATCH_HALF_WIDTH,
            search_half_width: DEFAULT_SEARCH_HALF_WIDTH,
            swarm: SwarmConfig::default(),
            fitness: FitnessMode::Literal,
            segment_seconds: 10.0,
            mi_bins: DEFAULT_MI_BINS,
            model_reference: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.segment_seconds > 0.0) || !self.segment_seconds.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "segment duration must be positive, got {}",
                self.segment_seconds
            )));
        }
        if self.patch_half_width < 1 {
            return Err(Error::InvalidParameter(
                "patch half-width must be at least 1".into(),
            ));
        }
        if self.search_half_width < self.patch_half_width {
            return Err(Error::InvalidParameter(format!(
                "search half-width {} smaller than patch half-width {}",
                self.search_half_width, self.patch_half_width
            )));
        }
        if self.mi_bins < 2 {
            return Err(Error::InvalidParameter(
                "mutual information needs at least 2 bins".into(),
            ));
        }
        if let WaveletChoice::Named(name) = &self.wavelet {
            get_filter(name)?;
        }
        self.swarm.validate()
    }
}

/// The wavelet and level a run actually used once any `auto` choice is
/// settled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedBasis {
    pub wavelet: String,
    pub level: usize,
}

/// Settles the config's wavelet/level choices against one signal. Named
/// and fixed choices pass through; `auto` wavelet ranks the whole filter
/// database by reconstruction error, and `auto` level walks the iterated
/// approximation split capped at [`MAX_AUTO_LEVEL`].
pub fn resolve_basis(buffer: &SignalBuffer, cfg: &PipelineConfig) -> Result<ResolvedBasis> {
    let wavelet = match &cfg.wavelet {
        WaveletChoice::Named(name) => name.clone(),
        WaveletChoice::Auto => {
            let candidates: Vec<_> = all_filters().iter().collect();
            let level = match cfg.level {
                LevelChoice::Fixed(l) => l,
                LevelChoice::Auto => PROVISIONAL_SELECTION_LEVEL,
            };
            select_wavelet(std::slice::from_ref(buffer), &candidates, level)?.to_string()
        }
    };
    let level = match cfg.level {
        LevelChoice::Fixed(l) => l,
        LevelChoice::Auto => select_level(buffer, get_filter(&wavelet)?, MAX_AUTO_LEVEL)?,
    };
    Ok(ResolvedBasis { wavelet, level })
}

/// What happened to one corrupted segment. Clean segments never get one,
/// which is how the trace encodes "untouched".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectionTrace {
    pub wavelet: String,
    pub level: usize,
    /// One non-local-means bandwidth per subband, in node order.
    pub bandwidths: Vec<f64>,
    /// Ratio of each subband's spread to its correction residual (dB),
    /// clamped like the fitness itself.
    pub subband_sar_db: Vec<f64>,
    pub fitness_mode: FitnessMode,
    pub optimizer: Algorithm,
    pub optimizer_seed: u64,
    pub best_fitness: f64,
    /// Best-so-far fitness per optimizer iteration; non-decreasing.
    pub history: Vec<f64>,
}

/// Per-segment record of a denoising run, one JSON line each.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenoiseTrace {
    pub channel_index: usize,
    pub start_sample: usize,
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correction: Option<CorrectionTrace>,
}

/// Per-segment optimizer seed: a avalanche mix of the run seed with the
/// segment's coordinates, so every segment searches from a different but
/// reproducible starting population.
fn segment_seed(seed: u64, channel_index: usize, start_sample: usize) -> u64 {
    let mut z = seed
        ^ (channel_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (start_sample as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Classifies one segment and corrects it when flagged. Clean segments come
/// back sample-identical. `reference` is the ground-truth clean signal for
/// the same samples; required iff the config asks for oracle fitness.
///
/// When the config says `auto`, the wavelet and level are settled on this
/// segment alone; [`denoise_recording`] instead settles them once on the
/// first corrupted segment and pins them for the whole run.
pub fn denoise_segment(
    seg: &Segment,
    cfg: &PipelineConfig,
    model: &SvmModel,
    reference: Option<&SignalBuffer>,
) -> Result<(Segment, DenoiseTrace)> {
    cfg.validate()?;
    let label = classify(model, seg);
    if label == Label::Clean {
        let mut out = seg.clone();
        out.label = Label::Clean;
        let trace = DenoiseTrace {
            channel_index: seg.channel_index,
            start_sample: seg.start_sample,
            label: label.to_string(),
            correction: None,
        };
        return Ok((out, trace));
    }

    let basis = resolve_basis(&seg.buffer, cfg)?;
    let filter = get_filter(&basis.wavelet)?;
    let subbands = wpd_decompose(&seg.buffer, filter, basis.level)?;
    let n_nodes = subbands.nodes.len();

    let spec = FitnessSpec {
        mode: cfg.fitness,
        subbands: &subbands,
        patch_half_width: cfg.patch_half_width,
        search_half_width: cfg.search_half_width,
        reference,
        filter,
    };
    // One eager evaluation surfaces structural problems (missing reference,
    // subbands shorter than a patch) as errors; inside the search the
    // objective must be total, and after this check it is.
    let mid = 0.5 * (cfg.swarm.lower_bound + cfg.swarm.upper_bound);
    evaluate_fitness(&vec![mid; n_nodes], &spec)?;

    let mut swarm = cfg.swarm;
    swarm.seed = segment_seed(cfg.seed, seg.channel_index, seg.start_sample);
    let result = optimize(
        |lambdas| evaluate_fitness(lambdas, &spec).unwrap_or(f64::NEG_INFINITY),
        n_nodes,
        &swarm,
    )?;

    let corrected = correct_subbands(
        &subbands,
        cfg.patch_half_width,
        cfg.search_half_width,
        &result.best_position,
    )?;
    let subband_sar_db = subbands
        .nodes
        .iter()
        .zip(&corrected.nodes)
        .map(|(orig, corr)| match sar(orig, corr) {
            Ok(v) => Ok(v.min(FITNESS_CAP_DB)),
            Err(Error::DegenerateResidual(_)) => Ok(FITNESS_CAP_DB),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<f64>>>()?;
    let recon = wpd_reconstruct(&corrected, filter)?;

    let out = Segment {
        channel_index: seg.channel_index,
        start_sample: seg.start_sample,
        buffer: recon,
        label: Label::Corrupted,
    };
    let trace = DenoiseTrace {
        channel_index: seg.channel_index,
        start_sample: seg.start_sample,
        label: label.to_string(),
        correction: Some(CorrectionTrace {
            wavelet: basis.wavelet,
            level: basis.level,
            bandwidths: result.best_position,
            subband_sar_db,
            fitness_mode: cfg.fitness,
            optimizer: swarm.algorithm,
            optimizer_seed: swarm.seed,
            best_fitness: result.best_fitness,
            history: result.history,
        }),
    };
    Ok((out, trace))
}

fn reference_slice(
    reference: Option<&Recording>,
    channel_index: usize,
    start: usize,
    len: usize,
    fs: f64,
) -> Option<SignalBuffer> {
    reference.map(|r| SignalBuffer {
        samples: r.channels[channel_index].samples[start..start + len].to_vec(),
        fs,
    })
}

/// Runs [`denoise_segment`] channel by channel, segment by segment. Any
/// `auto` wavelet/level choice is settled once, on the first segment the
/// classifier flags, and reused for every later segment. A trailing
/// remainder shorter than one segment is spliced back untouched, so the
/// output shape always equals the input shape. `reference` is the
/// ground-truth clean recording; required iff the config asks for oracle
/// fitness.
pub fn denoise_recording(
    rec: &Recording,
    cfg: &PipelineConfig,
    model: &SvmModel,
    reference: Option<&Recording>,
) -> Result<(Recording, Vec<DenoiseTrace>)> {
    cfg.validate()?;
    if let Some(r) = reference {
        if r.n_channels() != rec.n_channels() || r.n_samples() != rec.n_samples() {
            return Err(Error::InvalidParameter(format!(
                "reference shape {}x{} does not match recording shape {}x{}",
                r.n_channels(),
                r.n_samples(),
                rec.n_channels(),
                rec.n_samples()
            )));
        }
        if r.fs() != rec.fs() {
            return Err(Error::InvalidParameter(format!(
                "reference rate {} does not match recording rate {}",
                r.fs(),
                rec.fs()
            )));
        }
    }

    let segments = segmentize(rec, cfg.segment_seconds)?;

    // Settle auto choices on the first flagged segment, then pin them so the
    // whole run shares one basis.
    let mut pinned = cfg.clone();
    if pinned.wavelet == WaveletChoice::Auto || pinned.level == LevelChoice::Auto {
        if let Some(first) = segments
            .iter()
            .find(|s| classify(model, s) == Label::Corrupted)
        {
            let basis = resolve_basis(&first.buffer, cfg)?;
            pinned.wavelet = WaveletChoice::Named(basis.wavelet);
            pinned.level = LevelChoice::Fixed(basis.level);
        }
    }

    let mut channels: Vec<Vec<f64>> = rec.channels.iter().map(|c| c.samples.clone()).collect();
    let mut traces = Vec::with_capacity(segments.len());
    for seg in &segments {
        let slice = reference_slice(
            reference,
            seg.channel_index,
            seg.start_sample,
            seg.buffer.len(),
            rec.fs(),
        );
        let (out, trace) = denoise_segment(seg, &pinned, model, slice.as_ref())?;
        channels[seg.channel_index][seg.start_sample..seg.start_sample + out.buffer.len()]
            .copy_from_slice(&out.buffer.samples);
        traces.push(trace);
    }

    let fs = rec.fs();
    let out = Recording::new(
        channels
            .into_iter()
            .map(|samples| SignalBuffer { samples, fs })
            .collect(),
    )?;
    Ok((out, traces))
}

fn mean_of(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Scores a finished run channel by channel. Mutual information is always
/// computed between the corrupted input and the denoised output. With a
/// ground-truth reference the report adds correlation and structural
/// similarity of the output against the reference, plus the output's
/// artifact-to-residual ratio; without one those fields stay empty.
pub fn evaluate_run(
    corrupted: &Recording,
    denoised: &Recording,
    clean_reference: Option<&Recording>,
    cfg: &PipelineConfig,
) -> Result<EvaluationReport> {
    cfg.validate()?;
    if corrupted.n_channels() != denoised.n_channels()
        || corrupted.n_samples() != denoised.n_samples()
    {
        return Err(Error::InvalidParameter(
            "corrupted and denoised recordings must have the same shape".into(),
        ));
    }
    if let Some(r) = clean_reference {
        if r.n_channels() != corrupted.n_channels() || r.n_samples() != corrupted.n_samples() {
            return Err(Error::InvalidParameter(
                "reference recording must have the same shape as the run".into(),
            ));
        }
    }

    let mut per_channel = Vec::with_capacity(corrupted.n_channels());
    for (k, (input, output)) in corrupted
        .channels
        .iter()
        .zip(&denoised.channels)
        .enumerate()
    {
        let mi = mutual_information(input, output, cfg.mi_bins)?;
        let (cc, ssim, sar_db) = match clean_reference {
            Some(r) => {
                let truth = &r.channels[k];
                let sar_db = match sar(&truth.samples, &output.samples) {
                    Ok(v) => Some(v),
                    // An output identical to the truth has no residual to
                    // measure; report the ratio as absent, not as an error.
                    Err(Error::DegenerateResidual(_)) => None,
                    Err(e) => return Err(e),
                };
                (
                    Some(correlation_coefficient(output, truth)?),
                    Some(ssim_1d(output, truth)?),
                    sar_db,
                )
            }
            None => (None, None, None),
        };
        per_channel.push(ChannelEvaluation {
            channel: k,
            cc,
            ssim,
            mi,
            sar_db,
        });
    }

    let collect = |f: fn(&ChannelEvaluation) -> Option<f64>| {
        per_channel.iter().filter_map(f).collect::<Vec<f64>>()
    };
    Ok(EvaluationReport {
        cc: mean_of(&collect(|c| c.cc)),
        ssim: mean_of(&collect(|c| c.ssim)),
        mi: mean_of(&per_channel.iter().map(|c| c.mi).collect::<Vec<_>>()).unwrap_or(0.0),
        sar_db: mean_of(&collect(|c| c.sar_db)),
        per_channel,
    })
}

/// Correlation between the corrupted input and the denoised output over the
/// samples outside every artifact window: the information-preservation
/// check. Windows are (start, end) pairs in seconds, end inclusive.
pub fn clean_window_cc(
    corrupted: &SignalBuffer,
    denoised: &SignalBuffer,
    windows: &[(f64, f64)],
) -> Result<f64> {
    if corrupted.len() != denoised.len() {
        return Err(Error::InvalidParameter(format!(
            "length mismatch: {} vs {}",
            corrupted.len(),
            denoised.len()
        )));
    }
    let fs = corrupted.fs;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..corrupted.len() {
        let t = i as f64 / fs;
        if windows.iter().all(|&(a, b)| t < a || t > b) {
            x.push(corrupted.samples[i]);
            y.push(denoised.samples[i]);
        }
    }
    if x.is_empty() {
        return Err(Error::InvalidParameter(
            "artifact windows cover every sample; nothing outside them to compare".into(),
        ));
    }
    correlation_coefficient(
        &SignalBuffer { samples: x, fs },
        &SignalBuffer { samples: y, fs },
    )
}
