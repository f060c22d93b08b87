//! Per-capture feature extraction, the feature CSV and the extraction log.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capture::{CaptureSequence, Class, Frame, Mask};
use crate::classifier::Matrix;
use crate::config::RunConfig;
use crate::dynamic::{dynamic_features, DynamicFlags, DynamicInputs, PerspirationConfig, RealignedRidge};
use crate::error::{PadError, Result};
use crate::ingest::{blank_flags, CleaningReport, EntryFailure};
use crate::layout::{layout_hash, FeatureLayout, FeatureSet, DYNAMIC_LEN, ID_COLUMNS, STATIC_LEN};
use crate::segmentation::{analyze_frame, compute_foreground_gray, FrameAnalysis, SegmentationConfig};
use crate::selection::{select_from_flags, FramePair};
use crate::static_features::{static_features, valley_signal};

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionConfig {
    pub sigma_threshold: f64,
    pub segmentation: SegmentationConfig,
    pub perspiration: PerspirationConfig,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self::from(&RunConfig::default())
    }
}

impl From<&RunConfig> for ExtractionConfig {
    fn from(c: &RunConfig) -> Self {
        Self {
            sigma_threshold: c.sigma_threshold,
            segmentation: c.segmentation(),
            perspiration: c.perspiration(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureFeatures {
    pub capture_id: String,
    pub subject_id: String,
    pub class: Class,
    /// Static block then dynamic block, as selected.
    pub values: Vec<f64>,
    pub pair: Option<FramePair>,
    pub flags: Option<DynamicFlags>,
    pub alignment_lag: Option<isize>,
}

/// Intermediate results kept for debug dumps.
struct Artifacts {
    a1: FrameAnalysis,
    a2: Option<FrameAnalysis>,
    union_foreground: Option<Mask>,
    ridge: Option<RealignedRidge>,
    valley: Option<Vec<f64>>,
}

fn extract_inner(seq: &CaptureSequence, set: FeatureSet, cfg: &ExtractionConfig) -> Result<(CaptureFeatures, Artifacts)> {
    let blank = blank_flags(seq, cfg.sigma_threshold);
    let seg = &cfg.segmentation;
    let want_static = set != FeatureSet::Dynamic;
    let want_dynamic = set != FeatureSet::Static;

    let pair = if want_dynamic {
        Some(select_from_flags(&blank, &seq.timestamps())?)
    } else {
        None
    };
    let f1_index = match pair {
        Some(p) => p.f1_index,
        None => blank.iter().position(|&b| !b).ok_or(PadError::NoUsableFrames)?,
    };
    let f1 = seq.frame(f1_index);
    let a1 = analyze_frame(f1, seg)?;

    let mut values = Vec::with_capacity(STATIC_LEN + DYNAMIC_LEN);
    let mut valley = None;
    if want_static {
        let own;
        let analysis = match seq.static_frame() {
            Some(frame) => {
                own = analyze_frame(frame, seg)?;
                &own
            }
            None => &a1,
        };
        values.extend(static_features(analysis, seg.top_n_signals)?.values());
        valley = Some(valley_signal(analysis, seg.top_n_signals)?);
    }

    let mut artifacts = Artifacts {
        a1,
        a2: None,
        union_foreground: None,
        ridge: None,
        valley,
    };
    let (mut flags, mut lag) = (None, None);
    if let Some(p) = pair {
        let f2 = seq.frame(p.f2_index);
        let a2 = analyze_frame(f2, seg)?;
        let burst: Vec<&Frame> = seq
            .frames()
            .iter()
            .zip(&blank)
            .filter(|(_, &b)| !b)
            .map(|(f, _)| f)
            .collect();
        let (w, h) = seq.dimensions();
        let union = burst.iter().fold(Mask::empty(w, h), |acc, f| {
            acc.or(&compute_foreground_gray(&f.to_grayscale(), seg.block, seg.var_threshold))
        });
        let inputs = DynamicInputs {
            f1,
            f2,
            a1: &artifacts.a1,
            a2: &a2,
            burst,
            union_foreground: &union,
        };
        let block = dynamic_features(&inputs, seg, &cfg.perspiration)?;
        values.extend_from_slice(&block.values);
        flags = Some(block.flags);
        lag = Some(block.alignment_lag);
        artifacts.ridge = RealignedRidge::new(&artifacts.a1, &a2, seg).ok();
        artifacts.a2 = Some(a2);
        artifacts.union_foreground = Some(union);
    }
    Ok((
        CaptureFeatures {
            capture_id: seq.capture_id().to_string(),
            subject_id: seq.subject_id().to_string(),
            class: seq.class(),
            values,
            pair,
            flags,
            alignment_lag: lag,
        },
        artifacts,
    ))
}

/// Features of the requested set for one capture. Static features use the
/// dedicated static frame when the capture has one, F1 otherwise.
pub fn extract_capture(seq: &CaptureSequence, set: FeatureSet, cfg: &ExtractionConfig) -> Result<CaptureFeatures> {
    extract_inner(seq, set, cfg).map(|r| r.0)
}

/// Writes a mask as a 1-bit grayscale PNG (white = set).
pub fn save_mask_png(mask: &Mask, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut enc = png::Encoder::new(file, mask.width as u32, mask.height as u32);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(png::BitDepth::One);
    let stride = mask.width.div_ceil(8);
    let mut data = vec![0u8; stride * mask.height];
    for y in 0..mask.height {
        for x in 0..mask.width {
            if mask.get(x, y) {
                data[y * stride + x / 8] |= 0x80 >> (x % 8);
            }
        }
    }
    let mut w = enc
        .write_header()
        .map_err(|e| PadError::Io(std::io::Error::other(e)))?;
    w.write_image_data(&data)
        .map_err(|e| PadError::Io(std::io::Error::other(e)))?;
    Ok(())
}

fn write_signal_csv(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["index"];
    head.extend_from_slice(header);
    w.write_record(&head)?;
    let n = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    for i in 0..n {
        let mut rec = vec![i.to_string()];
        rec.extend(columns.iter().map(|c| c[i].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

fn dump_artifacts(dir: &Path, art: &Artifacts) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let frames = std::iter::once(("f1", &art.a1)).chain(art.a2.as_ref().map(|a| ("f2", a)));
    for (tag, a) in frames {
        save_mask_png(&a.foreground, &dir.join(format!("{tag}_foreground.png")))?;
        save_mask_png(&a.ridges.ridge_pixels, &dir.join(format!("{tag}_ridges.png")))?;
        save_mask_png(&a.ridges.skeleton, &dir.join(format!("{tag}_skeleton.png")))?;
    }
    if let Some(u) = &art.union_foreground {
        save_mask_png(u, &dir.join("union_foreground.png"))?;
    }
    if let Some(r) = &art.ridge {
        let (s1, s2) = r.aligned();
        write_signal_csv(&dir.join("ridge_signal.csv"), &["f1", "f2"], &[s1, s2])?;
    }
    if let Some(v) = &art.valley {
        write_signal_csv(&dir.join("valley_signal.csv"), &["valley"], &[v])?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureLog {
    pub capture_id: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair: Option<FramePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flags: Option<DynamicFlags>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment_lag: Option<isize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionLog {
    pub run_config_hash: String,
    pub set: FeatureSet,
    pub layout_hash: String,
    /// Captures attempted, including those that failed to load.
    pub total: usize,
    pub extracted: usize,
    pub failed: usize,
    pub failure_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cleaning: Option<CleaningReport>,
    pub load_failures: Vec<EntryFailure>,
    pub captures: Vec<CaptureLog>,
}

impl ExtractionLog {
    /// Fails when more than `max_fraction` of the captures failed.
    pub fn check_failure_rate(&self, max_fraction: f64) -> Result<()> {
        if self.failure_fraction > max_fraction {
            return Err(PadError::InsufficientData(format!(
                "{} of {} captures failed extraction ({:.1}% > {:.1}%)",
                self.failed,
                self.total,
                100.0 * self.failure_fraction,
                100.0 * max_fraction
            )));
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Extracts every sequence in parallel, keeping input order. Failing
/// captures are logged and left out of the table.
pub fn extract_sequences(
    sequences: &[CaptureSequence],
    set: FeatureSet,
    cfg: &ExtractionConfig,
    run_config_hash: &str,
    debug_dir: Option<&Path>,
) -> (FeatureTable, ExtractionLog) {
    let results: Vec<Result<CaptureFeatures>> = sequences
        .par_iter()
        .map(|seq| {
            let (features, art) = extract_inner(seq, set, cfg)?;
            if let Some(dir) = debug_dir {
                dump_artifacts(&dir.join(seq.capture_id()), &art)?;
            }
            Ok(features)
        })
        .collect();
    let layout = FeatureLayout::new(set);
    let mut table = FeatureTable {
        set,
        names: layout.names().map(String::from).collect(),
        run_config_hash: run_config_hash.to_string(),
        rows: Vec::new(),
    };
    let mut captures = Vec::with_capacity(sequences.len());
    for (seq, r) in sequences.iter().zip(results) {
        match r {
            Ok(f) => {
                captures.push(CaptureLog {
                    capture_id: f.capture_id.clone(),
                    ok: true,
                    pair: f.pair,
                    flags: f.flags,
                    alignment_lag: f.alignment_lag,
                    error: None,
                });
                table.rows.push(FeatureRow {
                    capture_id: f.capture_id,
                    subject_id: f.subject_id,
                    class: f.class,
                    values: f.values,
                });
            }
            Err(e) => {
                log::warn!("capture {}: {e}", seq.capture_id());
                captures.push(CaptureLog {
                    capture_id: seq.capture_id().to_string(),
                    ok: false,
                    pair: None,
                    flags: None,
                    alignment_lag: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let extracted = table.rows.len();
    let log = ExtractionLog {
        run_config_hash: run_config_hash.to_string(),
        set,
        layout_hash: layout.hash(),
        total: sequences.len(),
        extracted,
        failed: sequences.len() - extracted,
        failure_fraction: 0.0,
        cleaning: None,
        load_failures: Vec::new(),
        captures,
    };
    (table, log.with_failure_fraction())
}

impl ExtractionLog {
    /// Adds loading failures and the cleaning report of a manifest load.
    pub fn with_loading(mut self, cleaning: CleaningReport, failures: Vec<EntryFailure>) -> Self {
        self.total += failures.len();
        self.failed += failures.len();
        self.cleaning = Some(cleaning);
        self.load_failures = failures;
        self.with_failure_fraction()
    }

    fn with_failure_fraction(mut self) -> Self {
        self.failure_fraction = if self.total == 0 {
            0.0
        } else {
            self.failed as f64 / self.total as f64
        };
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub capture_id: String,
    pub subject_id: String,
    pub class: Class,
    pub values: Vec<f64>,
}

/// Feature rows under a known layout.
///
/// CSV form: a `#` line carrying the set, layout hash and run-config hash,
/// then a header `capture_id,subject_id,class,<feature names>` and one row
/// per capture.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub set: FeatureSet,
    pub names: Vec<String>,
    pub run_config_hash: String,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn layout_hash(&self) -> String {
        layout_hash(self.names.iter().map(String::as_str))
    }

    pub fn matrix(&self) -> Matrix {
        Matrix {
            rows: self.rows.len(),
            cols: self.names.len(),
            data: self.rows.iter().flat_map(|r| r.values.iter().copied()).collect(),
        }
    }

    pub fn labels(&self) -> Vec<Class> {
        self.rows.iter().map(|r| r.class).collect()
    }

    pub fn subjects(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.subject_id.clone()).collect()
    }

    /// Columns of `set`, taken from a table of the same set or a fused one.
    pub fn select(&self, set: FeatureSet) -> Result<FeatureTable> {
        if set == self.set {
            return Ok(self.clone());
        }
        let range = match (self.set, set) {
            (FeatureSet::Fused, FeatureSet::Static) => 0..STATIC_LEN,
            (FeatureSet::Fused, FeatureSet::Dynamic) => STATIC_LEN..STATIC_LEN + DYNAMIC_LEN,
            _ => {
                return Err(PadError::LayoutMismatch {
                    expected: format!("{set} or fused features"),
                    found: format!("{} features", self.set),
                })
            }
        };
        Ok(FeatureTable {
            set,
            names: self.names[range.clone()].to_vec(),
            run_config_hash: self.run_config_hash.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| FeatureRow {
                    values: r.values[range.clone()].to_vec(),
                    ..r.clone()
                })
                .collect(),
        })
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut w = std::io::BufWriter::new(w);
        writeln!(
            w,
            "# padpipe features set={} layout={} run_config={}",
            self.set,
            self.layout_hash(),
            self.run_config_hash
        )?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(ID_COLUMNS.iter().copied().chain(self.names.iter().map(String::as_str)))?;
        for r in &self.rows {
            let mut rec = vec![r.capture_id.clone(), r.subject_id.clone(), r.class.to_string()];
            rec.extend(r.values.iter().map(|v| v.to_string()));
            cw.write_record(&rec)?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn read_csv(r: impl Read) -> Result<Self> {
        let bad = |m: String| PadError::FeatureFile(m);
        let mut reader = BufReader::new(r);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let meta = first
            .strip_prefix("# padpipe features ")
            .ok_or_else(|| bad("missing '# padpipe features' metadata line".into()))?;
        let field = |key: &str| {
            meta.split_whitespace()
                .find_map(|kv| kv.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| bad(format!("metadata lacks {key}")))
        };
        let declared_layout = field("layout")?;
        let run_config_hash = field("run_config")?;

        let mut cr = csv::Reader::from_reader(reader);
        let header = cr.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < ID_COLUMNS.len() || cols[..ID_COLUMNS.len()] != ID_COLUMNS {
            return Err(bad(format!("header must start with {}", ID_COLUMNS.join(","))));
        }
        let names: Vec<String> = cols[ID_COLUMNS.len()..].iter().map(|s| s.to_string()).collect();
        let set = FeatureSet::ALL
            .into_iter()
            .find(|&s| FeatureLayout::new(s).names().eq(names.iter().map(String::as_str)))
            .ok_or_else(|| PadError::LayoutMismatch {
                expected: "static, dynamic or fused feature columns".into(),
                found: format!("{} unrecognized columns", names.len()),
            })?;
        let table_hash = layout_hash(names.iter().map(String::as_str));
        if table_hash != declared_layout {
            return Err(PadError::LayoutMismatch {
                expected: table_hash,
                found: declared_layout,
            });
        }
        let mut rows = Vec::new();
        for (i, rec) in cr.records().enumerate() {
            let rec = rec?;
            let line = i + 3;
            if rec.len() != cols.len() {
                return Err(bad(format!("line {line}: {} fields, expected {}", rec.len(), cols.len())));
            }
            let values = rec
                .iter()
                .skip(ID_COLUMNS.len())
                .enumerate()
                .map(|(j, s)| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| bad(format!("line {line}, column {}: bad value {s:?}", names[j])))
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(FeatureRow {
                capture_id: rec[0].to_string(),
                subject_id: rec[1].to_string(),
                class: rec[2]
                    .parse()
                    .map_err(|e| bad(format!("line {line}: {e}")))?,
                values,
            });
        }
        Ok(FeatureTable {
            set,
            names,
            run_config_hash,
            rows,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{dynamic_specs, Identity, FUSED_LEN};
    use crate::synth::{generate_one, generate_preset, Preset, SynthParams};

    #[test]
    fn fused_row_layout() {
        let seqs = generate_preset(Preset::Live, 1, 2).unwrap();
        let (table, log) = extract_sequences(&seqs, FeatureSet::Fused, &ExtractionConfig::default(), "h", None);
        assert_eq!(log.failed, 0, "{:?}", log.captures);
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows.iter().all(|r| r.values.len() == FUSED_LEN));
        let st = table.select(FeatureSet::Static).unwrap();
        let only_static = extract_capture(&seqs[0], FeatureSet::Static, &ExtractionConfig::default()).unwrap();
        assert_eq!(st.rows[0].values, only_static.values);
        assert_eq!(table.select(FeatureSet::Dynamic).unwrap().names.len(), DYNAMIC_LEN);
    }

    #[test]
    fn repeated_frame_gives_identity_dynamics() {
        let seq = generate_one(&SynthParams::still(), crate::capture::GroundTruth::live(), 3, "s", "c").unwrap();
        let f = extract_capture(&seq, FeatureSet::Dynamic, &ExtractionConfig::default()).unwrap();
        for (spec, v) in dynamic_specs().iter().zip(&f.values) {
            let expected = match spec.identity {
                Identity::Zero => 0.0,
                Identity::One => 1.0,
                Identity::MaskRatioSelf | Identity::None => continue,
            };
            assert!((v - expected).abs() <= 1e-9, "{} = {v}", spec.name);
        }
    }

    #[test]
    fn csv_roundtrip_and_validation() {
        let seqs = generate_preset(Preset::Spoof, 2, 2).unwrap();
        let (table, _) = extract_sequences(&seqs, FeatureSet::Static, &ExtractionConfig::default(), "abc", None);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let back = FeatureTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, table);

        let text = String::from_utf8(buf).unwrap();
        let tampered = text.replacen("lbp_r1_00", "lbp_r1_xx", 1);
        assert!(matches!(
            FeatureTable::read_csv(tampered.as_bytes()),
            Err(PadError::LayoutMismatch { .. })
        ));
        assert!(matches!(
            table.select(FeatureSet::Fused),
            Err(PadError::LayoutMismatch { .. })
        ));
    }

    #[test]
    fn blank_capture_is_logged_not_zero_filled() {
        let mut p = Preset::Live.params();
        p.faults.blank_frames = (0..8).collect();
        let seq = generate_one(&p, crate::capture::GroundTruth::live(), 1, "s", "bad").unwrap();
        let (table, log) = extract_sequences(&[seq], FeatureSet::Fused, &ExtractionConfig::default(), "h", None);
        assert!(table.rows.is_empty());
        assert_eq!(log.failed, 1);
        assert!(log.check_failure_rate(0.1).is_err());
    }

    #[test]
    fn debug_dump_writes_masks_and_signals() {
        let dir = tempfile::tempdir().unwrap();
        let seqs = generate_preset(Preset::Live, 5, 1).unwrap();
        extract_sequences(&seqs, FeatureSet::Fused, &ExtractionConfig::default(), "h", Some(dir.path()));
        let sub = dir.path().join(seqs[0].capture_id());
        for f in ["f1_foreground.png", "f2_skeleton.png", "union_foreground.png", "ridge_signal.csv", "valley_signal.csv"] {
            assert!(sub.join(f).is_file(), "{f}");
        }
        let img = image::open(sub.join("f1_foreground.png")).unwrap().to_luma8();
        assert_eq!(img.width(), 160);
    }
}
