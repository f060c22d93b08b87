//! Dataset manifests, frame loading and blank-frame cleaning.
//!
//! A capture is kept only if it contains a run of at least
//! [`MIN_NON_BLANK_RUN`] consecutive non-blank frames. A frame is blank when
//! the population standard deviation of the grayscale middle row falls below
//! a threshold.

use std::collections::HashSet;
use std::io::Read;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capture::{
    synthesized_timestamps, CaptureSequence, Class, Frame, GrayFrame, GroundTruth, Mold,
};
use crate::error::{PadError, Result};

pub const DEFAULT_SIGMA_THRESHOLD: f64 = 3.0;
pub const MIN_NON_BLANK_RUN: usize = 7;
pub const MANIFEST_VERSION: u32 = 1;

/// Population standard deviation of the middle grayscale row.
pub fn middle_row_std(gray: &GrayFrame) -> f64 {
    let row = gray.row(gray.height / 2);
    let n = row.len() as f64;
    let mean = row.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = row
        .iter()
        .map(|&v| (f64::from(v) - mean).powi(2))
        .sum::<f64>()
        / n;
    var.sqrt()
}

pub fn is_blank_gray(gray: &GrayFrame, sigma_threshold: f64) -> bool {
    middle_row_std(gray) < sigma_threshold
}

pub fn is_blank(frame: &Frame, sigma_threshold: f64) -> bool {
    is_blank_gray(&frame.to_grayscale(), sigma_threshold)
}

/// Blank flags for every frame of a sequence.
pub fn blank_flags(seq: &CaptureSequence, sigma_threshold: f64) -> Vec<bool> {
    seq.frames()
        .iter()
        .map(|f| is_blank(f, sigma_threshold))
        .collect()
}

/// Longest run of consecutive `false` entries.
pub fn longest_non_blank_run(blank: &[bool]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &b in blank {
        if b {
            run = 0;
        } else {
            run += 1;
            best = best.max(run);
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CleanDecision {
    Keep,
    Drop,
}

pub fn decide_from_flags(blank: &[bool]) -> CleanDecision {
    if longest_non_blank_run(blank) >= MIN_NON_BLANK_RUN {
        CleanDecision::Keep
    } else {
        CleanDecision::Drop
    }
}

pub fn clean_sequence(seq: &CaptureSequence, sigma_threshold: f64) -> CleanDecision {
    decide_from_flags(&blank_flags(seq, sigma_threshold))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub total_in: usize,
    pub removed: usize,
    pub removed_ids: Vec<String>,
    pub rule: String,
    pub sigma_threshold: f64,
}

impl CleaningReport {
    fn new(sigma_threshold: f64) -> Self {
        Self {
            total_in: 0,
            removed: 0,
            removed_ids: Vec::new(),
            rule: format!(
                "keep iff >= {MIN_NON_BLANK_RUN} consecutive frames with middle-row gray std >= {sigma_threshold}"
            ),
            sigma_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub capture_id: String,
    pub subject_id: String,
    pub class: Class,
    pub mold: Mold,
    #[serde(default)]
    pub material: String,
    pub frames: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps_ms: Option<Vec<u64>>,
    /// Optional dedicated static capture used for the static features.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_frame: Option<String>,
}

impl ManifestEntry {
    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            class: self.class,
            mold: self.mold,
            material: self.material.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    /// Hash of the run configuration that produced this manifest, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_config_hash: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Self {
            version: MANIFEST_VERSION,
            run_config_hash: None,
            entries: Vec::new(),
        }
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let manifest: Manifest = serde_json::from_str(text).map_err(|e| PadError::Manifest {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(PadError::Manifest {
                location: "version".into(),
                message: format!("unsupported version {}", self.version),
            });
        }
        let mut seen = HashSet::new();
        for (i, e) in self.entries.iter().enumerate() {
            let loc = |field: &str| format!("entries[{i}].{field}");
            if e.capture_id.is_empty() {
                return Err(PadError::Manifest {
                    location: loc("capture_id"),
                    message: "empty capture_id".into(),
                });
            }
            if !seen.insert(e.capture_id.as_str()) {
                return Err(PadError::Manifest {
                    location: loc("capture_id"),
                    message: format!("duplicate capture_id {:?}", e.capture_id),
                });
            }
            if e.frames.is_empty() {
                return Err(PadError::Manifest {
                    location: loc("frames"),
                    message: "no frame paths".into(),
                });
            }
            if let Some(ts) = &e.timestamps_ms {
                if ts.len() != e.frames.len() {
                    return Err(PadError::Manifest {
                        location: loc("timestamps_ms"),
                        message: format!("{} timestamps for {} frames", ts.len(), e.frames.len()),
                    });
                }
            }
            if let Err(err) = e.ground_truth().validate() {
                return Err(PadError::Manifest {
                    location: loc("class"),
                    message: err.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Converts a CSV listing into a manifest.
    ///
    /// Columns: `capture_id,subject_id,class,mold,material,frames,timestamps_ms`
    /// where `frames` and `timestamps_ms` are `;`-separated lists and the
    /// timestamp column may be empty.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            capture_id: String,
            subject_id: String,
            class: String,
            mold: String,
            #[serde(default)]
            material: String,
            frames: String,
            #[serde(default)]
            timestamps_ms: String,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let bad = |field: &str, message: String| PadError::Manifest {
                location: format!("csv line {line}, field {field}"),
                message,
            };
            let row = row.map_err(|e| bad("?", e.to_string()))?;
            let class: Class = row.class.parse().map_err(|e: PadError| bad("class", e.to_string()))?;
            let mold: Mold = row.mold.parse().map_err(|e: PadError| bad("mold", e.to_string()))?;
            let frames: Vec<String> = row
                .frames
                .split(';')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            let timestamps_ms = if row.timestamps_ms.trim().is_empty() {
                None
            } else {
                Some(
                    row.timestamps_ms
                        .split(';')
                        .map(|t| t.trim().parse::<u64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|e| bad("timestamps_ms", e.to_string()))?,
                )
            };
            entries.push(ManifestEntry {
                capture_id: row.capture_id,
                subject_id: row.subject_id,
                class,
                mold,
                material: row.material,
                frames,
                timestamps_ms,
                static_frame: None,
            });
        }
        let manifest = Manifest {
            entries,
            ..Manifest::default()
        };
        manifest.validate()?;
        Ok(manifest)
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let path = Path::new(p);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Loads one manifest entry's frames. Relative paths resolve against `base`.
pub fn load_entry(entry: &ManifestEntry, base: &Path) -> Result<CaptureSequence> {
    let timestamps = entry
        .timestamps_ms
        .clone()
        .unwrap_or_else(|| synthesized_timestamps(entry.frames.len()));
    let mut frames = Vec::with_capacity(entry.frames.len());
    for (p, &ts) in entry.frames.iter().zip(&timestamps) {
        let path = resolve(base, p);
        if !path.is_file() {
            return Err(PadError::MissingFile {
                capture_id: entry.capture_id.clone(),
                path,
            });
        }
        frames.push(Frame::load(&path, ts)?);
    }
    let mut seq = CaptureSequence::new(
        frames,
        entry.ground_truth(),
        entry.subject_id.clone(),
        entry.capture_id.clone(),
    )?;
    if let Some(p) = &entry.static_frame {
        let path = resolve(base, p);
        if !path.is_file() {
            return Err(PadError::MissingFile {
                capture_id: entry.capture_id.clone(),
                path,
            });
        }
        seq = seq.with_static_frame(Frame::load(&path, 0)?)?;
    }
    Ok(seq)
}

/// An entry that could not be loaded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryFailure {
    pub capture_id: String,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Kept sequences in manifest order.
    pub sequences: Vec<CaptureSequence>,
    /// Manifest entries matching `sequences`.
    pub entries: Vec<ManifestEntry>,
    pub report: CleaningReport,
    pub failures: Vec<EntryFailure>,
}

/// Loads, validates and cleans every entry of a manifest already in memory.
pub fn load_manifest(manifest: &Manifest, base: &Path, sigma_threshold: f64) -> Dataset {
    let loaded: Vec<_> = manifest
        .entries
        .par_iter()
        .map(|e| {
            load_entry(e, base).map(|seq| {
                let decision = clean_sequence(&seq, sigma_threshold);
                (seq, decision)
            })
        })
        .collect();

    let mut report = CleaningReport::new(sigma_threshold);
    let mut sequences = Vec::new();
    let mut entries = Vec::new();
    let mut failures = Vec::new();
    for (entry, result) in manifest.entries.iter().zip(loaded) {
        match result {
            Ok((seq, decision)) => {
                report.total_in += 1;
                match decision {
                    CleanDecision::Keep => {
                        sequences.push(seq);
                        entries.push(entry.clone());
                    }
                    CleanDecision::Drop => {
                        report.removed += 1;
                        report.removed_ids.push(entry.capture_id.clone());
                    }
                }
            }
            Err(err) => failures.push(EntryFailure {
                capture_id: entry.capture_id.clone(),
                error: err.to_string(),
            }),
        }
    }
    Dataset {
        sequences,
        entries,
        report,
        failures,
    }
}

/// Parses the manifest at `manifest_path` and loads the cleaned dataset.
pub fn load_dataset(manifest_path: &Path, sigma_threshold: f64) -> Result<Dataset> {
    let manifest = Manifest::from_path(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    Ok(load_manifest(&manifest, base, sigma_threshold))
}

/// Rewrites relative frame paths so they stay valid from `to_dir`.
pub fn rebase_entry(entry: &ManifestEntry, from_dir: &Path, to_dir: &Path) -> ManifestEntry {
    let same = match (from_dir.canonicalize(), to_dir.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => from_dir == to_dir,
    };
    if same {
        return entry.clone();
    }
    let fix = |p: &String| {
        let path = resolve(from_dir, p);
        path.canonicalize()
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned()
    };
    ManifestEntry {
        frames: entry.frames.iter().map(fix).collect(),
        static_frame: entry.static_frame.as_ref().map(fix),
        ..entry.clone()
    }
}
