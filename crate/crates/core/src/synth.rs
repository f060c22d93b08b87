//! Synthetic capture bursts with or without the liveness phenomena.
//!
//! Each frame renders a soft-edged elliptical contact region carrying an
//! arc-shaped sinusoidal ridge pattern (dark ridges, bright valleys) on a
//! flat bright background. Over the burst a live finger shows a G and B
//! gain ramp, moisture spreading from pores along the ridges, a small
//! drift and a growing contact area. A spoof shows none of the color or
//! moisture changes, drifts further and presses a smaller region with a
//! different tint and surface grain.

use std::f64::consts::TAU;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capture::{CaptureSequence, Class, Frame, GroundTruth, Mold, BURST_LEN, DEFAULT_FRAME_SPACING_MS};
use crate::error::{PadError, Result};
use crate::ingest::{Manifest, ManifestEntry};

pub const DEFAULT_SIZE: usize = 160;
pub const DEFAULT_PERIOD: f64 = 8.0;
const BACKGROUND: f64 = 238.0;
const PORE_SPACING: f64 = 12.0;

/// Strength of each simulated phenomenon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhenomenaParams {
    /// G and B gain increase reached at the last frame (R stays fixed).
    pub blood_shift: f64,
    /// Moisture spread per second along the ridges.
    pub perspiration: f64,
    /// Translation per frame in pixels.
    pub shift_px: f64,
    /// Contact-area growth over the burst, as a fraction.
    pub contact_growth: f64,
    /// Per-pixel, per-channel Gaussian noise std.
    pub noise_sigma: f64,
}

impl Default for PhenomenaParams {
    fn default() -> Self {
        Self {
            blood_shift: 0.0,
            perspiration: 0.0,
            shift_px: 0.0,
            contact_growth: 0.0,
            noise_sigma: 0.0,
        }
    }
}

/// Material look of the presented finger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Appearance {
    /// Channel multipliers applied to the contact region.
    pub tint: [f64; 3],
    pub valley_level: f64,
    pub ridge_level: f64,
    /// Contact ellipse semi-axes as fractions of the frame size.
    pub radii: [f64; 2],
    /// Amplitude of the fine surface grain.
    pub grain: f64,
    pub ridge_period: f64,
}

impl Default for Appearance {
    fn default() -> Self {
        Self {
            tint: [1.0, 0.80, 0.74],
            valley_level: 205.0,
            ridge_level: 85.0,
            radii: [0.34, 0.42],
            grain: 0.0,
            ridge_period: DEFAULT_PERIOD,
        }
    }
}

/// Faults injected to exercise cleaning and frame selection.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FaultFlags {
    /// Frame indices rendered blank.
    pub blank_frames: Vec<usize>,
    /// Emit only this many frames.
    pub truncate_to: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub phenomena: PhenomenaParams,
    pub appearance: Appearance,
    pub faults: FaultFlags,
    pub size: usize,
    pub frames: usize,
    pub spacing_ms: u64,
    /// Draw per-capture variations of geometry and strengths.
    pub jitter: bool,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            phenomena: PhenomenaParams::default(),
            appearance: Appearance::default(),
            faults: FaultFlags::default(),
            size: DEFAULT_SIZE,
            frames: BURST_LEN,
            spacing_ms: DEFAULT_FRAME_SPACING_MS,
            jitter: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Live,
    Spoof,
}

impl std::str::FromStr for Preset {
    type Err = PadError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "live" => Ok(Preset::Live),
            "spoof" => Ok(Preset::Spoof),
            other => Err(PadError::Config(format!("unknown preset {other:?}"))),
        }
    }
}

impl Preset {
    pub fn class(self) -> Class {
        match self {
            Preset::Live => Class::Live,
            Preset::Spoof => Class::Spoof,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.class().as_str()
    }

    pub fn label(self) -> GroundTruth {
        match self {
            Preset::Live => GroundTruth::live(),
            Preset::Spoof => GroundTruth::spoof(Mold::ThreeD, "gelatin"),
        }
    }

    pub fn params(self) -> SynthParams {
        match self {
            Preset::Live => SynthParams {
                phenomena: PhenomenaParams {
                    blood_shift: 0.10,
                    perspiration: 0.35,
                    shift_px: 0.3,
                    contact_growth: 0.08,
                    noise_sigma: 1.0,
                },
                ..SynthParams::default()
            },
            Preset::Spoof => SynthParams {
                phenomena: PhenomenaParams {
                    blood_shift: 0.0,
                    perspiration: 0.0,
                    shift_px: 1.2,
                    contact_growth: 0.0,
                    noise_sigma: 1.0,
                },
                appearance: Appearance {
                    tint: [0.96, 0.90, 0.84],
                    valley_level: 195.0,
                    ridge_level: 105.0,
                    radii: [0.28, 0.34],
                    grain: 9.0,
                    ridge_period: DEFAULT_PERIOD,
                },
                ..SynthParams::default()
            },
        }
    }
}

impl SynthParams {
    /// Identical frames: no phenomena, no noise, no jitter.
    pub fn still() -> Self {
        Self {
            jitter: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.phenomena;
        let bad = |m: String| Err(PadError::Config(m));
        for (name, v) in [
            ("perspiration", p.perspiration),
            ("shift_px", p.shift_px),
            ("contact_growth", p.contact_growth),
            ("noise_sigma", p.noise_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be a finite value >= 0, got {v}"));
            }
        }
        let gain = 1.0 + p.blood_shift;
        if !(0.5..=2.0).contains(&gain) {
            return bad(format!("blood_shift gain {gain} outside [0.5, 2]"));
        }
        let a = &self.appearance;
        if a.tint.iter().any(|&t| !(0.0..=2.0).contains(&t)) {
            return bad("tint multipliers must lie in [0, 2]".into());
        }
        if a.radii.iter().any(|&r| !(r > 0.0 && r <= 0.5)) {
            return bad("radii must lie in (0, 0.5]".into());
        }
        if !(a.ridge_period >= 3.0) || a.grain < 0.0 {
            return bad("ridge_period must be >= 3 and grain >= 0".into());
        }
        if self.size < 32 || self.frames == 0 || self.spacing_ms == 0 {
            return bad("size must be >= 32 and frames, spacing_ms positive".into());
        }
        Ok(())
    }
}

/// Everything drawn at random for one capture.
#[derive(Debug, Clone)]
struct Instance {
    center: (f64, f64),
    radii: (f64, f64),
    /// Point the ridge arcs are centered on.
    focus: (f64, f64),
    period: f64,
    drift: (f64, f64),
    brightness: f64,
    blood_shift: f64,
    perspiration: f64,
    pore_phase: f64,
    grain: [(f64, f64, f64); 3],
}

impl Instance {
    fn draw(params: &SynthParams, rng: &mut ChaCha8Rng) -> Self {
        let s = params.size as f64;
        let a = &params.appearance;
        let p = &params.phenomena;
        let mut j = |lo: f64, hi: f64| if params.jitter { rng.gen_range(lo..hi) } else { (lo + hi) / 2.0 };
        let center = (s / 2.0 + j(-6.0, 6.0), s / 2.0 + j(-6.0, 6.0));
        let radii = (a.radii[0] * s * j(0.95, 1.05), a.radii[1] * s * j(0.95, 1.05));
        let focus = (center.0 + j(-30.0, 30.0), center.1 + s * j(0.8, 1.1));
        let period = a.ridge_period * j(0.95, 1.05);
        let angle = j(0.0, TAU);
        let brightness = j(-8.0, 8.0);
        let blood_shift = p.blood_shift * j(0.8, 1.2);
        let perspiration = p.perspiration * j(0.7, 1.3);
        let pore_phase = j(0.0, TAU);
        let grain = std::array::from_fn(|_| {
            let theta = j(0.0, TAU);
            let f = TAU / j(2.5, 4.0);
            (f * theta.cos(), f * theta.sin(), j(0.0, TAU))
        });
        Self {
            center,
            radii,
            focus,
            period,
            drift: (p.shift_px * angle.cos(), p.shift_px * angle.sin()),
            brightness,
            blood_shift,
            perspiration,
            pore_phase,
            grain,
        }
    }
}

fn render_frame(params: &SynthParams, inst: &Instance, k: usize, rng: &mut ChaCha8Rng) -> Frame {
    let n = params.size;
    let a = &params.appearance;
    let p = &params.phenomena;
    let noise = Normal::new(0.0, p.noise_sigma.max(0.0)).expect("valid std");
    let ts = k as u64 * params.spacing_ms;
    let t_sec = ts as f64 / 1000.0;
    let tau = if params.frames > 1 { k as f64 / (params.frames - 1) as f64 } else { 0.0 };
    let blank = params.faults.blank_frames.contains(&k);

    let scale = (1.0 + p.contact_growth * tau).sqrt();
    let (rx, ry) = (inst.radii.0 * scale, inst.radii.1 * scale);
    let shift = (inst.drift.0 * k as f64, inst.drift.1 * k as f64);
    let gain = [1.0, 1.0 + inst.blood_shift * tau, 1.0 + inst.blood_shift * tau];
    let moisture = inst.perspiration * t_sec;
    let edge = rx.min(ry) / 1.5;

    let mut planes = [vec![0u8; n * n], vec![0u8; n * n], vec![0u8; n * n]];
    for y in 0..n {
        for x in 0..n {
            let i = y * n + x;
            let mut rgb = [BACKGROUND; 3];
            if !blank {
                let (u, v) = (x as f64 - shift.0, y as f64 - shift.1);
                let d = (((u - inst.center.0) / rx).powi(2) + ((v - inst.center.1) / ry).powi(2)).sqrt();
                let alpha = ((1.0 - d) * edge).clamp(0.0, 1.0);
                if alpha > 0.0 {
                    let (du, dv) = (u - inst.focus.0, v - inst.focus.1);
                    let dist = du.hypot(dv);
                    let ridge = 0.5 * (1.0 + (TAU * dist / inst.period).cos());
                    let arc = du.atan2(-dv) * dist;
                    let pore = 0.5 * (1.0 + (TAU * arc / PORE_SPACING + inst.pore_phase).cos());
                    let grain: f64 = inst
                        .grain
                        .iter()
                        .map(|g| (g.0 * u + g.1 * v + g.2).sin())
                        .sum::<f64>()
                        * a.grain
                        / 3.0;
                    let level = a.valley_level + inst.brightness
                        - (a.valley_level - a.ridge_level) * ridge
                        - 80.0 * moisture * ridge * (0.4 + 0.6 * pore)
                        - 30.0 * moisture * (1.0 - ridge) * pore
                        + grain;
                    for c in 0..3 {
                        let fg = level * a.tint[c] * gain[c];
                        rgb[c] = alpha * fg + (1.0 - alpha) * BACKGROUND;
                    }
                }
            }
            for c in 0..3 {
                let v = if p.noise_sigma > 0.0 { rgb[c] + noise.sample(rng) } else { rgb[c] };
                planes[c][i] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    let [r, g, b] = planes;
    Frame::new(n, n, r, g, b, ts).expect("consistent plane sizes")
}

/// Seed of capture `index` derived from the master seed.
pub fn capture_seed(seed: u64, index: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((index as u64).wrapping_add(1));
    rng.next_u64()
}

/// One capture rendered from `params` with a private seed.
pub fn generate_one(
    params: &SynthParams,
    label: GroundTruth,
    seed: u64,
    subject_id: &str,
    capture_id: &str,
) -> Result<CaptureSequence> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = Instance::draw(params, &mut rng);
    let count = params.faults.truncate_to.unwrap_or(params.frames).min(params.frames);
    let frames = (0..count).map(|k| render_frame(params, &inst, k, &mut rng)).collect();
    CaptureSequence::new(frames, label, subject_id, capture_id)
}

/// `n` captures. Capture `i` is `{prefix}_{i:04}` of subject `s{i/2:04}`,
/// so live and spoof sets generated with the same `n` share subjects.
pub fn generate(
    params: &SynthParams,
    label: GroundTruth,
    prefix: &str,
    seed: u64,
    n: usize,
) -> Result<Vec<CaptureSequence>> {
    params.validate()?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            generate_one(
                params,
                label.clone(),
                capture_seed(seed, i),
                &format!("s{:04}", i / 2),
                &format!("{prefix}_{i:04}"),
            )
        })
        .collect()
}

/// Generates `n` captures of a preset.
pub fn generate_preset(preset: Preset, seed: u64, n: usize) -> Result<Vec<CaptureSequence>> {
    generate(&preset.params(), preset.label(), preset.as_str(), seed, n)
}

/// Live then spoof captures; the spoof set uses a seed distinct from the
/// live one.
pub fn generate_corpus(seed: u64, n_live: usize, n_spoof: usize) -> Result<Vec<CaptureSequence>> {
    let mut out = generate_preset(Preset::Live, capture_seed(seed, usize::MAX - 1), n_live)?;
    out.extend(generate_preset(Preset::Spoof, capture_seed(seed, usize::MAX), n_spoof)?);
    Ok(out)
}

/// Writes every frame as `{dir}/{capture_id}/frame_{k}.png` and returns a
/// manifest with paths relative to `dir`.
pub fn write_corpus(sequences: &[CaptureSequence], dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let entries: Vec<Result<ManifestEntry>> = sequences
        .par_iter()
        .map(|seq| {
            let sub = dir.join(seq.capture_id());
            std::fs::create_dir_all(&sub)?;
            let mut frames = Vec::with_capacity(seq.len());
            for (k, f) in seq.frames().iter().enumerate() {
                let name = format!("{}/frame_{k}.png", seq.capture_id());
                f.save_png(&dir.join(&name))?;
                frames.push(name);
            }
            let label = seq.label();
            Ok(ManifestEntry {
                capture_id: seq.capture_id().to_string(),
                subject_id: seq.subject_id().to_string(),
                class: label.class,
                mold: label.mold,
                material: label.material.clone(),
                frames,
                timestamps_ms: Some(seq.timestamps()),
                static_frame: None,
            })
        })
        .collect();
    Ok(Manifest {
        entries: entries.into_iter().collect::<Result<_>>()?,
        ..Manifest::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamic::delta_image_feature;
    use crate::ingest::{clean_sequence, CleanDecision, DEFAULT_SIGMA_THRESHOLD};
    use crate::segmentation::compute_foreground;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_preset(Preset::Live, 3, 2).unwrap();
        let b = generate_preset(Preset::Live, 3, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_eq!(a[1].subject_id(), "s0000");
        assert_eq!(a[1].capture_id(), "live_0001");
    }

    #[test]
    fn presets_pass_cleaning() {
        for preset in [Preset::Live, Preset::Spoof] {
            for seq in generate_preset(preset, 11, 4).unwrap() {
                assert_eq!(seq.len(), BURST_LEN);
                assert_eq!(clean_sequence(&seq, DEFAULT_SIGMA_THRESHOLD), CleanDecision::Keep);
            }
        }
    }

    #[test]
    fn faults_reach_cleaning() {
        let mut p = Preset::Live.params();
        p.faults.blank_frames = vec![3];
        let seq = generate_one(&p, GroundTruth::live(), 1, "s", "c").unwrap();
        assert_eq!(clean_sequence(&seq, DEFAULT_SIGMA_THRESHOLD), CleanDecision::Drop);

        let mut p = Preset::Live.params();
        p.faults.truncate_to = Some(7);
        let seq = generate_one(&p, GroundTruth::live(), 1, "s", "c").unwrap();
        assert_eq!(seq.len(), 7);
        assert_eq!(clean_sequence(&seq, DEFAULT_SIGMA_THRESHOLD), CleanDecision::Keep);
    }

    #[test]
    fn still_params_repeat_the_frame() {
        let seq = generate_one(&SynthParams::still(), GroundTruth::live(), 5, "s", "c").unwrap();
        let first = seq.frame(0).to_interleaved();
        assert!(seq.frames().iter().all(|f| f.to_interleaved() == first));
    }

    #[test]
    fn spoof_has_smaller_foreground() {
        let live = generate_preset(Preset::Live, 2, 1).unwrap();
        let spoof = generate_preset(Preset::Spoof, 2, 1).unwrap();
        let area = |s: &CaptureSequence| compute_foreground(s.frame(0), 16, 100.0).count();
        assert!(area(&spoof[0]) < area(&live[0]));
    }

    #[test]
    fn shift_increases_delta_image() {
        let mean_delta = |shift: f64| {
            let mut p = SynthParams::still();
            p.phenomena.shift_px = shift;
            p.phenomena.noise_sigma = 1.0;
            p.jitter = true;
            let seqs = generate(&p, GroundTruth::live(), "c", 9, 50).unwrap();
            seqs.iter()
                .map(|s| {
                    let frames: Vec<&Frame> = s.frames().iter().collect();
                    let mask = compute_foreground(s.frame(0), 16, 100.0);
                    delta_image_feature(&frames, &mask).unwrap()
                })
                .sum::<f64>()
                / 50.0
        };
        assert!(mean_delta(2.0) > mean_delta(0.0));
    }

    #[test]
    fn live_color_change_separates_from_spoof() {
        use crate::features::{extract_capture, ExtractionConfig};
        use crate::layout::FeatureSet;
        let cfg = ExtractionConfig::from(&crate::config::RunConfig::default());
        let gr_diff = |preset: Preset| -> Vec<f64> {
            let mut v: Vec<f64> = generate_preset(preset, 1, 50)
                .unwrap()
                .iter()
                .map(|s| extract_capture(s, FeatureSet::Dynamic, &cfg).unwrap().values[0])
                .collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let (live, spoof) = (gr_diff(Preset::Live), gr_diff(Preset::Spoof));
        let iqr = |v: &[f64]| (v[v.len() / 4], v[3 * v.len() / 4]);
        let ((l1, l3), (s1, s3)) = (iqr(&live), iqr(&spoof));
        eprintln!("live IQR [{l1}, {l3}], spoof IQR [{s1}, {s3}]");
        assert!(l1 > s3 || s1 > l3, "IQRs overlap");
        assert!(live[25].abs() > spoof[25].abs());
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = SynthParams::default();
        p.phenomena.blood_shift = 1.5;
        assert!(p.validate().is_err());
        let mut p = SynthParams::default();
        p.phenomena.shift_px = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn corpus_roundtrip_through_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let seqs = generate_preset(Preset::Spoof, 4, 2).unwrap();
        let m = write_corpus(&seqs, dir.path()).unwrap();
        m.validate().unwrap();
        let ds = crate::ingest::load_manifest(&m, dir.path(), DEFAULT_SIGMA_THRESHOLD);
        assert_eq!(ds.sequences, seqs);
    }
}
