//! Color-ratio images and measures, their frame-to-frame change metrics and
//! the mean-color Euclidean distance.

use serde::{Deserialize, Serialize};

use crate::capture::{Channel, Frame, Mask};
use crate::error::{PadError, Result};

/// Added to every color-ratio denominator.
pub const RATIO_EPSILON: f64 = 0.001;
/// Guard on the denominator of the ratio-of-means change metric.
pub const MEAN_RATIO_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorRatioConfig {
    /// (numerator, denominator) pairs in feature order.
    pub channel_pairs: Vec<(Channel, Channel)>,
    pub epsilon: f64,
}

impl Default for ColorRatioConfig {
    fn default() -> Self {
        Self {
            channel_pairs: vec![
                (Channel::Green, Channel::Red),
                (Channel::Blue, Channel::Red),
                (Channel::Green, Channel::Blue),
            ],
            epsilon: RATIO_EPSILON,
        }
    }
}

/// Element-wise `num / (den + eps)` over the masked pixels, in raster order.
pub fn color_ratio_image(frame: &Frame, num: Channel, den: Channel, mask: &Mask) -> Vec<f64> {
    let (n, d) = (frame.plane(num), frame.plane(den));
    mask.indices()
        .map(|i| f64::from(n[i]) / (f64::from(d[i]) + RATIO_EPSILON))
        .collect()
}

/// Element-wise ratio of two sampled sequences.
pub fn ratio_values(num: &[f64], den: &[f64]) -> Vec<f64> {
    num.iter()
        .zip(den)
        .map(|(&n, &d)| n / (d + RATIO_EPSILON))
        .collect()
}

pub fn channel_mean(frame: &Frame, channel: Channel, mask: &Mask) -> Result<f64> {
    let plane = frame.plane(channel);
    let (sum, n) = mask
        .indices()
        .fold((0.0, 0usize), |(s, n), i| (s + f64::from(plane[i]), n + 1));
    if n == 0 {
        return Err(PadError::EmptyMask("measure"));
    }
    Ok(sum / n as f64)
}

/// `mean(num) / (mean(den) + eps)` over the mask.
pub fn color_ratio_measure(frame: &Frame, num: Channel, den: Channel, mask: &Mask) -> Result<f64> {
    Ok(channel_mean(frame, num, mask)? / (channel_mean(frame, den, mask)? + RATIO_EPSILON))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    pub diff: f64,
    pub ratio: f64,
    pub sumsquare: f64,
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Difference of means, ratio of means and root of the summed squared
/// element-wise differences between a frame-1 and a frame-2 measure.
pub fn pair_metrics(m1: &[f64], m2: &[f64]) -> Result<PairMetrics> {
    if m1.len() != m2.len() {
        return Err(PadError::AlignmentError {
            left: m1.len(),
            right: m2.len(),
        });
    }
    if m1.is_empty() {
        return Err(PadError::EmptyMask("measure"));
    }
    let (a, b) = (mean(m1), mean(m2));
    let sumsquare = m1
        .iter()
        .zip(m2)
        .map(|(&x, &y)| (y - x) * (y - x))
        .sum::<f64>()
        .sqrt();
    Ok(PairMetrics {
        diff: b - a,
        ratio: b / (a + MEAN_RATIO_GUARD),
        sumsquare,
    })
}

/// Difference and ratio of two scalar measures.
pub fn scalar_pair_metrics(m1: f64, m2: f64) -> (f64, f64) {
    (m2 - m1, m2 / (m1 + MEAN_RATIO_GUARD))
}

/// Euclidean norm of the per-channel mean differences between two frames.
pub fn sequence_euclid(f1: &Frame, f2: &Frame, mask1: &Mask, mask2: &Mask) -> Result<f64> {
    let mut sq = 0.0;
    for ch in Channel::ALL {
        let d = channel_mean(f2, ch, mask2)? - channel_mean(f1, ch, mask1)?;
        sq += d * d;
    }
    Ok(sq.sqrt())
}
