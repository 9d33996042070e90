//! Signal containers, segmentation, and the zero-phase band-pass filter.

use crate::error::{Error, Result};

/// A single-channel signal: samples in microvolts plus the sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalBuffer {
    pub samples: Vec<f64>,
    pub fs: f64,
}

impl SignalBuffer {
    /// Validates finiteness, positive rate, and non-emptiness.
    pub fn new(samples: Vec<f64>, fs: f64) -> Result<Self> {
        if !(fs > 0.0) || !fs.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sampling rate must be positive and finite, got {fs}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter("signal must not be empty".into()));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(Self { samples, fs })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|v| v * v).sum::<f64>() / self.samples.len() as f64).sqrt()
    }
}

/// Segment classification state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Label {
    Corrupted,
    Clean,
    Unknown,
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Corrupted => write!(f, "corrupted"),
            Label::Clean => write!(f, "clean"),
            Label::Unknown => write!(f, "unknown"),
        }
    }
}

/// A fixed-duration slice of one channel, tracked by origin.
#[derive(Debug, Clone)]
pub struct Segment {
    pub channel_index: usize,
    pub start_sample: usize,
    pub buffer: SignalBuffer,
    pub label: Label,
}

/// A multichannel recording; all channels share length and rate.
#[derive(Debug, Clone)]
pub struct Recording {
    pub channels: Vec<SignalBuffer>,
}

impl Recording {
    pub fn new(channels: Vec<SignalBuffer>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidParameter("recording needs at least one channel".into()))?;
        let (len, fs) = (first.len(), first.fs);
        for (i, ch) in channels.iter().enumerate() {
            if ch.len() != len {
                return Err(Error::InvalidParameter(format!(
                    "channel {i} length {} differs from channel 0 length {len}",
                    ch.len()
                )));
            }
            if ch.fs != fs {
                return Err(Error::InvalidParameter(format!(
                    "channel {i} rate {} differs from channel 0 rate {fs}",
                    ch.fs
                )));
            }
        }
        Ok(Self { channels })
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels[0].len()
    }

    pub fn fs(&self) -> f64 {
        self.channels[0].fs
    }
}

/// Splits every channel into non-overlapping `seconds`-long segments.
/// A trailing remainder shorter than one segment is dropped. Labels start
/// as `Unknown`.
pub fn segmentize(rec: &Recording, seconds: f64) -> Result<Vec<Segment>> {
    let fs = rec.fs();
    let seg_len_f = seconds * fs;
    let seg_len = seg_len_f.round() as usize;
    if seg_len == 0 || (seg_len_f - seg_len as f64).abs() > 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "segment duration {seconds} s at {fs} Hz is not a positive whole number of samples"
        )));
    }
    let mut out = Vec::new();
    for (channel_index, ch) in rec.channels.iter().enumerate() {
        let n_whole = ch.len() / seg_len;
        for k in 0..n_whole {
            let start_sample = k * seg_len;
            out.push(Segment {
                channel_index,
                start_sample,
                buffer: SignalBuffer {
                    samples: ch.samples[start_sample..start_sample + seg_len].to_vec(),
                    fs,
                },
                label: Label::Unknown,
            });
        }
    }
    Ok(out)
}

/// One second-order recursive section (direct form II transposed).
#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2], // a0 normalized to 1
}

impl Biquad {
    fn filter_with_zi(&self, x: &[f64], zi: [f64; 2]) -> Vec<f64> {
        let mut z1 = zi[0];
        let mut z2 = zi[1];
        let mut y = Vec::with_capacity(x.len());
        for &xi in x {
            let yi = self.b[0] * xi + z1;
            z1 = self.b[1] * xi - self.a[0] * yi + z2;
            z2 = self.b[2] * xi - self.a[1] * yi;
            y.push(yi);
        }
        y
    }

    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (1.0 + self.a[0] + self.a[1])
    }

    /// Steady-state internal state for a unit-amplitude constant input.
    fn step_zi(&self) -> [f64; 2] {
        let k = self.dc_gain();
        [k - self.b[0], self.b[2] - self.a[1] * k]
    }

    fn response_at(&self, omega: f64) -> num_complex_like::Complex {
        use num_complex_like::Complex;
        let z1 = Complex::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        let num = Complex::new(self.b[0], 0.0) + z1 * self.b[1] + z2 * self.b[2];
        let den = Complex::new(1.0, 0.0) + z1 * self.a[0] + z2 * self.a[1];
        num / den
    }
}

/// Minimal complex arithmetic for filter design; avoids pulling a numerics
/// crate into the public dependency surface for a handful of operations.
mod num_complex_like {
    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Complex {
        pub re: f64,
        pub im: f64,
    }

    impl Complex {
        pub fn new(re: f64, im: f64) -> Self {
            Self { re, im }
        }
        pub fn from_polar(r: f64, theta: f64) -> Self {
            Self::new(r * theta.cos(), r * theta.sin())
        }
        pub fn norm(self) -> f64 {
            self.re.hypot(self.im)
        }
        pub fn sqrt(self) -> Self {
            let r = self.norm().sqrt();
            let theta = self.im.atan2(self.re) / 2.0;
            Self::from_polar(r, theta)
        }
    }

    impl std::ops::Add for Complex {
        type Output = Complex;
        fn add(self, o: Complex) -> Complex {
            Complex::new(self.re + o.re, self.im + o.im)
        }
    }
    impl std::ops::Sub for Complex {
        type Output = Complex;
        fn sub(self, o: Complex) -> Complex {
            Complex::new(self.re - o.re, self.im - o.im)
        }
    }
    impl std::ops::Mul for Complex {
        type Output = Complex;
        fn mul(self, o: Complex) -> Complex {
            Complex::new(
                self.re * o.re - self.im * o.im,
                self.re * o.im + self.im * o.re,
            )
        }
    }
    impl std::ops::Mul<f64> for Complex {
        type Output = Complex;
        fn mul(self, s: f64) -> Complex {
            Complex::new(self.re * s, self.im * s)
        }
    }
    impl std::ops::Div for Complex {
        type Output = Complex;
        fn div(self, o: Complex) -> Complex {
            let d = o.re * o.re + o.im * o.im;
            Complex::new(
                (self.re * o.re + self.im * o.im) / d,
                (self.im * o.re - self.re * o.im) / d,
            )
        }
    }
    impl std::ops::Neg for Complex {
        type Output = Complex;
        fn neg(self) -> Complex {
            Complex::new(-self.re, -self.im)
        }
    }
}

use num_complex_like::Complex;

/// Designs a Butterworth band-pass from a 4th-order analog prototype
/// (four biquads after the low-pass-to-band-pass transform) via bilinear
/// transform with edge prewarping. `lo = 0` degenerates to a 4th-order
/// low-pass.
fn design_butterworth(lo: f64, hi: f64, fs: f64) -> Vec<Biquad> {
    let warp = |f: f64| 2.0 * fs * (std::f64::consts::PI * f / fs).tan();
    // 4th-order Butterworth prototype poles (left half-plane).
    let proto = [
        Complex::from_polar(1.0, std::f64::consts::PI * 5.0 / 8.0),
        Complex::from_polar(1.0, std::f64::consts::PI * 7.0 / 8.0),
        Complex::from_polar(1.0, std::f64::consts::PI * 9.0 / 8.0),
        Complex::from_polar(1.0, std::f64::consts::PI * 11.0 / 8.0),
    ];

    let bilinear_pole = |s: Complex| -> Complex {
        let two_fs = Complex::new(2.0 * fs, 0.0);
        (two_fs + s) / (two_fs - s)
    };
    let real_biquad_denominator = |p: Complex| -> [f64; 2] {
        // (z - p)(z - conj p) = z^2 - 2 Re(p) z + |p|^2
        [-2.0 * p.re, p.norm() * p.norm()]
    };

    let mut sections = Vec::new();
    if lo <= 0.0 {
        // Low-pass fallback: 4th-order Butterworth at cutoff `hi`.
        let wc = warp(hi);
        let lp_poles = [
            Complex::from_polar(1.0, std::f64::consts::PI * 5.0 / 8.0),
            Complex::from_polar(1.0, std::f64::consts::PI * 7.0 / 8.0),
        ];
        for p in lp_poles {
            let zp = bilinear_pole(p * wc);
            let a = real_biquad_denominator(zp);
            // Double zero at z = -1 (analog zeros at infinity).
            sections.push(Biquad { b: [1.0, 2.0, 1.0], a });
        }
        // Unity gain at DC.
        let g_total: f64 = sections.iter().map(Biquad::dc_gain).product();
        let per = (1.0 / g_total).powf(1.0 / sections.len() as f64);
        for s in &mut sections {
            for b in &mut s.b {
                *b *= per;
            }
        }
        return sections;
    }

    let wl = warp(lo);
    let wh = warp(hi);
    let w0sq = wl * wh;
    let bw = wh - wl;
    for p in proto {
        // s_bp solves s^2 - (p * bw) s + w0^2 = 0.
        let half = p * (bw / 2.0);
        let disc = (half * half - Complex::new(w0sq, 0.0)).sqrt();
        for s_bp in [half + disc, half - disc] {
            if s_bp.im < 0.0 {
                // Keep one of each conjugate pair; the denominator is built
                // from the pair, so track upper-half poles only.
                continue;
            }
            let zp = bilinear_pole(s_bp);
            let a = real_biquad_denominator(zp);
            // One zero at z=+1 and one at z=-1 per section: (z-1)(z+1).
            sections.push(Biquad { b: [1.0, 0.0, -1.0], a });
        }
    }
    debug_assert_eq!(sections.len(), 4);
    // Normalize to unity gain at the geometric center frequency.
    let fc = (lo * hi).sqrt();
    let omega = 2.0 * std::f64::consts::PI * fc / fs;
    let g_total: f64 = sections
        .iter()
        .map(|s| s.response_at(omega).norm())
        .product();
    let per = (1.0 / g_total).powf(1.0 / sections.len() as f64);
    for s in &mut sections {
        for b in &mut s.b {
            *b *= per;
        }
    }
    sections
}

/// Applies a biquad cascade forward and backward (zero phase) with odd
/// extension at both ends and steady-state initial conditions, so edge
/// transients do not leak into the output.
fn filtfilt_sos(sections: &[Biquad], x: &[f64], padlen: usize) -> Vec<f64> {
    let n = x.len();
    let padlen = padlen.min(n - 1);
    // Odd extension: reflect about the end samples.
    let mut ext = Vec::with_capacity(n + 2 * padlen);
    for i in (1..=padlen).rev() {
        ext.push(2.0 * x[0] - x[i]);
    }
    ext.extend_from_slice(x);
    for i in (n - 1 - padlen..n - 1).rev() {
        ext.push(2.0 * x[n - 1] - x[i]);
    }

    let pass = |data: &[f64]| -> Vec<f64> {
        let mut cur = data.to_vec();
        for s in sections {
            // Scaling the steady-state state by the section's actual first
            // input keeps the whole cascade transient-free from sample 0.
            let zi = s.step_zi();
            let x0 = cur[0];
            cur = s.filter_with_zi(&cur, [zi[0] * x0, zi[1] * x0]);
        }
        cur
    };

    let forward = pass(&ext);
    let mut rev: Vec<f64> = forward.into_iter().rev().collect();
    rev = pass(&rev);
    rev.reverse();
    rev[padlen..padlen + n].to_vec()
}

/// Zero-phase 4th-order Butterworth band-pass between `lo` and `hi` Hz.
/// `lo = 0` selects a low-pass. Output length equals input length.
pub fn bandpass(buffer: &SignalBuffer, lo: f64, hi: f64) -> Result<SignalBuffer> {
    let nyq = buffer.fs / 2.0;
    if !(lo >= 0.0 && lo < hi && hi < nyq) {
        return Err(Error::InvalidParameter(format!(
            "band edges must satisfy 0 <= lo < hi < fs/2, got [{lo}, {hi}] at fs {}",
            buffer.fs
        )));
    }
    let sections = design_butterworth(lo, hi, buffer.fs);
    // Pad with about three periods of the slowest passband component.
    let lo_eff = if lo > 0.0 { lo } else { hi };
    let padlen = ((3.0 * buffer.fs / lo_eff).ceil() as usize).min(buffer.len() - 1);
    let samples = filtfilt_sos(&sections, &buffer.samples, padlen);
    Ok(SignalBuffer {
        samples,
        fs: buffer.fs,
    })
}
