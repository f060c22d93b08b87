//! Dynamic features from the selected frame pair and the burst.
//!
//! Layout (51 values, see [`crate::layout::dynamic_specs`]):
//!
//! | family            | n  | content                                               |
//! |-------------------|----|-------------------------------------------------------|
//! | color foreground  | 12 | {diff, ratio, sumsq} x {G/R, B/R, G/B} + R,G,B diffs   |
//! | color ridge signal| 12 | same, on realigned ridge-signal samples                |
//! | color ridge pixels| 7  | {diff, ratio} x ratio measures + mean-color distance   |
//! | mask              | 6  | R1, R2, RS, delta background, XOR shift, delta fore    |
//! | shift             | 1  | mean delta image over the union foreground             |
//! | intensity         | 6  | histogram-difference statistics                        |
//! | perspiration      | 7  | spectral share + six ridge-signal changes              |
//!
//! The foreground color block is evaluated on the intersection of the two
//! foregrounds so the element-wise measures line up. The frame-2 ridge
//! signal is sampled along the frame-1 ridge paths and then realigned by
//! cross-correlation.

pub mod color;
pub mod intensity;
pub mod mask;
pub mod motion;
pub mod perspiration;

pub use color::{
    channel_mean, color_ratio_image, color_ratio_measure, pair_metrics, ratio_values,
    scalar_pair_metrics, sequence_euclid, ColorRatioConfig, PairMetrics,
};
pub use intensity::intensity_dynamic_features;
pub use mask::{mask_features, MaskFeatures};
pub use motion::{delta_image, delta_image_feature};
pub use perspiration::{perspiration_features, PerspirationConfig, PerspirationFeatures};

use crate::capture::{Channel, Frame, Mask};
use crate::error::{PadError, Result};
use crate::layout::DYNAMIC_LEN;
use crate::segmentation::{realign_signals, Alignment, FrameAnalysis, SegmentationConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DynamicFlags {
    pub mask_guarded: bool,
    pub alignment_degenerate: bool,
    pub perspiration_degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicFeatureBlock {
    pub values: Vec<f64>,
    pub flags: DynamicFlags,
    pub alignment_lag: isize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorFeatures {
    pub foreground: [f64; 12],
    pub ridge_signal: [f64; 12],
    pub ridge_pixels: [f64; 7],
}

/// Per-channel samples along a path.
fn sample_channels(frame: &Frame, path: &[(usize, usize)]) -> [Vec<f64>; 3] {
    let w = frame.width();
    Channel::ALL.map(|ch| {
        let plane = frame.plane(ch);
        path.iter()
            .map(|&(x, y)| f64::from(plane[y * w + x]))
            .collect()
    })
}

fn channel_index(ch: Channel) -> usize {
    match ch {
        Channel::Red => 0,
        Channel::Green => 1,
        Channel::Blue => 2,
    }
}

fn elementwise_block(
    c1: &[Vec<f64>; 3],
    c2: &[Vec<f64>; 3],
    cfg: &ColorRatioConfig,
) -> Result<[f64; 12]> {
    let mut out = [0.0; 12];
    for (k, &(num, den)) in cfg.channel_pairs.iter().enumerate().take(3) {
        let (n, d) = (channel_index(num), channel_index(den));
        let m1 = ratio_values(&c1[n], &c1[d]);
        let m2 = ratio_values(&c2[n], &c2[d]);
        let p = pair_metrics(&m1, &m2)?;
        out[3 * k..3 * k + 3].copy_from_slice(&[p.diff, p.ratio, p.sumsquare]);
    }
    for ch in 0..3 {
        out[9 + ch] = color::mean(&c2[ch]) - color::mean(&c1[ch]);
    }
    Ok(out)
}

/// The three color families. Returns the features and the ridge-signal
/// alignment, whose gray signals feed the perspiration features.
pub fn color_feature_block(
    f1: &Frame,
    f2: &Frame,
    a1: &FrameAnalysis,
    a2: &FrameAnalysis,
    seg: &SegmentationConfig,
) -> Result<(ColorFeatures, RealignedRidge)> {
    let cfg = ColorRatioConfig::default();

    let inter = a1.foreground.and(&a2.foreground);
    if inter.is_empty() {
        return Err(PadError::EmptyMask("foreground intersection"));
    }
    let path: Vec<(usize, usize)> = inter.indices().map(|i| (i % f1.width(), i / f1.width())).collect();
    let foreground = elementwise_block(&sample_channels(f1, &path), &sample_channels(f2, &path), &cfg)?;

    let ridge = RealignedRidge::new(a1, a2, seg)?;
    let (c1, c2) = (sample_channels(f1, &ridge.path), sample_channels(f2, &ridge.path));
    let aligned1: [Vec<f64>; 3] =
        std::array::from_fn(|k| ridge.alignment.apply(&c1[k], &c2[k]).0.to_vec());
    let aligned2: [Vec<f64>; 3] =
        std::array::from_fn(|k| ridge.alignment.apply(&c1[k], &c2[k]).1.to_vec());
    let ridge_signal = elementwise_block(&aligned1, &aligned2, &cfg)?;

    let (rp1, rp2) = (&a1.ridges.ridge_pixels, &a2.ridges.ridge_pixels);
    let mut ridge_pixels = [0.0; 7];
    for (k, &(num, den)) in cfg.channel_pairs.iter().enumerate().take(3) {
        let m1 = color_ratio_measure(f1, num, den, rp1)?;
        let m2 = color_ratio_measure(f2, num, den, rp2)?;
        let (d, r) = scalar_pair_metrics(m1, m2);
        ridge_pixels[2 * k] = d;
        ridge_pixels[2 * k + 1] = r;
    }
    ridge_pixels[6] = sequence_euclid(f1, f2, rp1, rp2)?;

    Ok((
        ColorFeatures {
            foreground,
            ridge_signal,
            ridge_pixels,
        },
        ridge,
    ))
}

/// Frame-1 ridge geometry sampled on both frames and realigned.
#[derive(Debug, Clone)]
pub struct RealignedRidge {
    pub path: Vec<(usize, usize)>,
    pub signal1: Vec<f64>,
    pub signal2: Vec<f64>,
    pub alignment: Alignment,
}

impl RealignedRidge {
    pub fn new(a1: &FrameAnalysis, a2: &FrameAnalysis, seg: &SegmentationConfig) -> Result<Self> {
        let top = a1.ridges.top_signal(seg.top_n_signals);
        let signal2: Vec<f64> = top
            .path
            .iter()
            .map(|&(x, y)| f64::from(a2.gray.get(x, y)))
            .collect();
        let alignment = realign_signals(&top.samples, &signal2, seg.max_lag)?;
        Ok(Self {
            path: top.path,
            signal1: top.samples,
            signal2,
            alignment,
        })
    }

    pub fn aligned(&self) -> (&[f64], &[f64]) {
        self.alignment.apply(&self.signal1, &self.signal2)
    }
}

/// Inputs for the full dynamic block of one capture.
pub struct DynamicInputs<'a> {
    pub f1: &'a Frame,
    pub f2: &'a Frame,
    pub a1: &'a FrameAnalysis,
    pub a2: &'a FrameAnalysis,
    /// Non-blank frames in capture order, for the delta image.
    pub burst: Vec<&'a Frame>,
    /// Union of the foregrounds of `burst`.
    pub union_foreground: &'a Mask,
}

pub fn dynamic_features(
    inputs: &DynamicInputs<'_>,
    seg: &SegmentationConfig,
    persp: &PerspirationConfig,
) -> Result<DynamicFeatureBlock> {
    let (color, ridge) = color_feature_block(inputs.f1, inputs.f2, inputs.a1, inputs.a2, seg)?;
    let masks = mask_features(&inputs.a1.foreground, &inputs.a2.foreground);
    let delta = delta_image_feature(&inputs.burst, inputs.union_foreground)?;
    let intensity = intensity_dynamic_features(
        &inputs.a1.gray,
        &inputs.a2.gray,
        &inputs.a1.foreground,
        &inputs.a2.foreground,
    )?;
    let (s1, s2) = ridge.aligned();
    let sweat = perspiration_features(s1, s2, persp)?;

    let mut values = Vec::with_capacity(DYNAMIC_LEN);
    values.extend_from_slice(&color.foreground);
    values.extend_from_slice(&color.ridge_signal);
    values.extend_from_slice(&color.ridge_pixels);
    values.extend_from_slice(&masks.values());
    values.push(delta);
    values.extend_from_slice(&intensity);
    values.extend_from_slice(&sweat.values());
    debug_assert_eq!(values.len(), DYNAMIC_LEN);
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(PadError::InvalidFrame(format!(
            "dynamic feature {i} is not finite"
        )));
    }
    Ok(DynamicFeatureBlock {
        values,
        flags: DynamicFlags {
            mask_guarded: masks.guarded,
            alignment_degenerate: ridge.alignment.degenerate,
            perspiration_degenerate: sweat.degenerate,
        },
        alignment_lag: ridge.alignment.lag,
    })
}
