//! File formats: the signal CSV dialect, run manifests, and atomic writes.
//!
//! Signals travel as plain CSV, one row per sample and one column per
//! channel, with an optional `# fs=<Hz>` comment header. Values are written
//! with 17 significant digits so a write/read round trip reproduces every
//! sample bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{Recording, SignalBuffer};

/// Sampling rate assumed when a signal file has no `# fs=` header.
pub const DEFAULT_FS: f64 = 250.0;

/// Manifest format version.
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Writes `bytes` to `path` through a same-directory temporary file and a
/// rename, so readers never observe a half-written file.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::InvalidParameter(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    if let Err(e) = fs::write(&tmp, bytes) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        e.into()
    })
}

/// Serializes one recording as CSV with a `# fs=` header. 17 significant
/// digits per value make the round trip exact.
pub fn format_signal_csv(rec: &Recording) -> String {
    let mut out = String::new();
    out.push_str(&format!("# fs={}\n", rec.fs()));
    for row in 0..rec.n_samples() {
        for (k, ch) in rec.channels.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", ch.samples[row]));
        }
        out.push('\n');
    }
    out
}

pub fn write_signal_csv(path: &Path, rec: &Recording) -> Result<()> {
    atomic_write(path, format_signal_csv(rec).as_bytes())
}

/// A parsed signal file plus whether the rate came from the file or from
/// the [`DEFAULT_FS`] fallback (callers surface the fallback as a warning).
#[derive(Debug, Clone)]
pub struct SignalFile {
    pub recording: Recording,
    pub fs_defaulted: bool,
}

/// Parses the signal CSV dialect: comment lines start with `#`, the first
/// `# fs=<Hz>` comment sets the rate, and every data row must carry the
/// same number of comma-separated decimal values.
pub fn parse_signal_csv(text: &str) -> Result<SignalFile> {
    let mut fs: Option<f64> = None;
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if let Some(comment) = line.strip_prefix('#') {
            if fs.is_none() {
                if let Some(value) = comment.trim().strip_prefix("fs=") {
                    let parsed: f64 = value.trim().parse().map_err(|_| {
                        Error::Format(format!("line {}: unparseable rate {value:?}", lineno + 1))
                    })?;
                    if !(parsed > 0.0) || !parsed.is_finite() {
                        return Err(Error::Format(format!(
                            "line {}: rate must be positive, got {parsed}",
                            lineno + 1
                        )));
                    }
                    fs = Some(parsed);
                }
            }
            continue;
        }
        if line.is_empty() {
            return Err(Error::Format(format!("line {}: blank data row", lineno + 1)));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if columns.is_empty() {
            columns = vec![Vec::new(); fields.len()];
        } else if fields.len() != columns.len() {
            return Err(Error::Format(format!(
                "line {}: {} columns where earlier rows had {}",
                lineno + 1,
                fields.len(),
                columns.len()
            )));
        }
        for (k, field) in fields.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "line {}: unparseable value {field:?} in column {}",
                    lineno + 1,
                    k + 1
                ))
            })?;
            columns[k].push(v);
        }
    }
    if columns.is_empty() || columns[0].is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    let fs_defaulted = fs.is_none();
    let fs = fs.unwrap_or(DEFAULT_FS);
    let channels = columns
        .into_iter()
        .map(|samples| {
            SignalBuffer::new(samples, fs).map_err(|e| Error::Format(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SignalFile {
        recording: Recording::new(channels).map_err(|e| Error::Format(e.to_string()))?,
        fs_defaulted,
    })
}

pub fn read_signal_csv(path: &Path) -> Result<SignalFile> {
    let text = fs::read_to_string(path)?;
    parse_signal_csv(&text).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Provenance record written next to every command's primary output:
/// what ran, with which effective configuration and seed, producing which
/// files, in how long.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Echo of the effective configuration, JSON-shaped by the caller.
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
    pub elapsed_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: "eegdenoise".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed: None,
            config,
            outputs: Vec::new(),
            elapsed_seconds: 0.0,
            notes: Vec::new(),
        }
    }
}

/// Where the manifest for a given primary output lives:
/// `out/run.csv` -> `out/run.manifest.json`.
pub fn manifest_path(primary_output: &Path) -> PathBuf {
    primary_output.with_extension("manifest.json")
}

/// Writes the manifest next to `primary_output` and returns its path.
pub fn write_manifest(primary_output: &Path, manifest: &RunManifest) -> Result<PathBuf> {
    let path = manifest_path(primary_output);
    let mut text = serde_json::to_string_pretty(manifest)
        .map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    atomic_write(&path, text.as_bytes())?;
    Ok(path)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path)?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(Error::Format(format!(
            "unsupported manifest schema {} (expected {MANIFEST_SCHEMA_VERSION})",
            manifest.schema_version
        )));
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(channels: Vec<Vec<f64>>, fs: f64) -> Recording {
        Recording::new(
            channels
                .into_iter()
                .map(|samples| SignalBuffer::new(samples, fs).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let awkward = vec![
            vec![1.0 / 3.0, -2.5e8, 4.9e-324, 0.1 + 0.2],
            vec![std::f64::consts::PI, 1e-15, -0.0, 2.0f64.powi(-1074)],
        ];
        let original = rec(awkward, 512.5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sig.csv");
        write_signal_csv(&path, &original).unwrap();
        let loaded = read_signal_csv(&path).unwrap();
        assert!(!loaded.fs_defaulted);
        assert_eq!(loaded.recording.fs(), 512.5);
        for (a, b) in original.channels.iter().zip(&loaded.recording.channels) {
            let bits_a: Vec<u64> = a.samples.iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.samples.iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn missing_header_defaults_rate() {
        let parsed = parse_signal_csv("1.0,2.0\n3.0,4.0\n").unwrap();
        assert!(parsed.fs_defaulted);
        assert_eq!(parsed.recording.fs(), DEFAULT_FS);
        assert_eq!(parsed.recording.n_channels(), 2);
        assert_eq!(parsed.recording.channels[0].samples, vec![1.0, 3.0]);
        assert_eq!(parsed.recording.channels[1].samples, vec![2.0, 4.0]);
    }

    #[test]
    fn header_and_crlf_are_parsed() {
        let parsed = parse_signal_csv("# fs=128\r\n# produced for a smoke test\r\n0.5\r\n-0.5\r\n").unwrap();
        assert!(!parsed.fs_defaulted);
        assert_eq!(parsed.recording.fs(), 128.0);
        assert_eq!(parsed.recording.channels[0].samples, vec![0.5, -0.5]);
    }

    #[test]
    fn malformed_inputs_are_format_errors() {
        for text in [
            "",                       // nothing at all
            "# fs=250\n",             // header only
            "1.0,2.0\n3.0\n",         // ragged row
            "1.0\npotato\n",          // bad value
            "# fs=elephants\n1.0\n",  // bad rate
            "# fs=-1\n1.0\n",         // non-positive rate
            "1.0\n\n2.0\n",           // interior blank line
            "1.0\nnan\n",             // non-finite sample
        ] {
            let err = parse_signal_csv(text).unwrap_err();
            assert!(matches!(err, Error::Format(_)), "{text:?} gave {err:?}");
        }
    }

    #[test]
    fn manifest_round_trip_and_path() {
        let dir = tempfile::tempdir().unwrap();
        let primary = dir.path().join("run.csv");
        assert_eq!(manifest_path(&primary), dir.path().join("run.manifest.json"));

        let mut m = RunManifest::new("simulate", serde_json::json!({"duration": 10.0}));
        m.seed = Some(7);
        m.outputs = vec!["run.csv".into()];
        m.elapsed_seconds = 0.25;
        m.notes.push("no corrupted segments".into());
        let written = write_manifest(&primary, &m).unwrap();
        let back = read_manifest(&written).unwrap();
        assert_eq!(back.schema_version, MANIFEST_SCHEMA_VERSION);
        assert_eq!(back.command, "simulate");
        assert_eq!(back.seed, Some(7));
        assert_eq!(back.outputs, vec!["run.csv".to_string()]);
        assert_eq!(back.notes, vec!["no corrupted segments".to_string()]);
        assert_eq!(back.config["duration"], 10.0);
    }

    #[test]
    fn manifest_rejects_other_schema_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.manifest.json");
        let mut m = RunManifest::new("train", serde_json::Value::Null);
        m.schema_version = 99;
        let text = serde_json::to_string(&m).unwrap();
        fs::write(&path, text).unwrap();
        assert!(matches!(read_manifest(&path), Err(Error::Format(_))));
    }

    #[test]
    fn atomic_write_replaces_and_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        fs::write(&path, "old").unwrap();
        atomic_write(&path, b"new contents").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "new contents");
        let leftovers: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .filter(|name| name.ends_with(".tmp"))
            .collect();
        assert!(leftovers.is_empty(), "stray temp files: {leftovers:?}");
    }
}
