//! Removal of muscle-activity (EMG) artifacts from EEG recordings.
//!
//! The processing chain: a linear SVM flags corrupted 10 s segments from
//! three features (variance, energy entropy, peak-to-peak); flagged segments
//! are split into wavelet packet subbands; each subband is corrected by a
//! one-dimensional non-local-means filter whose bandwidth is tuned per
//! subband by a swarm optimizer (grey wolf or particle swarm); the corrected
//! subbands are reconstructed into the output signal. Clean-labelled
//! segments pass through untouched.
//!
//! Companion tooling: a seeded biosignal simulator for building labelled
//! datasets, and evaluation metrics (correlation, 1-D structural similarity,
//! mutual information, Welch spectral density).

pub mod classifier;
pub mod error;
pub mod io;
pub mod metrics;
pub mod nlm;
pub mod optimizer;
pub mod pipeline;
pub mod signal;
pub mod simulator;
pub mod wavelet;

pub use error::{Error, Result};
pub use signal::{Label, Recording, Segment, SignalBuffer};
