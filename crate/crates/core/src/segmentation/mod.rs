//! Foreground masks, ridge skeletons and ridge-signal realignment.
//!
//! The foreground is found by block-wise variance thresholding followed by a
//! 3x3 closing, a 3x3 opening and selection of the largest 8-connected
//! component. Ridges are found by smoothing along the local orientation,
//! thresholding against the block mean, thinning to a one-pixel skeleton and
//! tracing skeleton branches into ordered pixel paths.

mod align;
mod foreground;
mod ridges;

pub use align::{realign_signals, Alignment};
pub use foreground::{
    block_variance_mask, close3, compute_foreground, compute_foreground_gray, dilate3, erode3,
    largest_component, open3,
};
pub use ridges::{
    extract_ridges, extract_ridges_gray, orientation_field, thin, trace_skeleton, OrientationField,
    RidgeExtraction, RidgePolarity, RidgeSignal,
};

use serde::{Deserialize, Serialize};

use crate::capture::GrayFrame;

pub const DEFAULT_BLOCK: usize = 16;
pub const DEFAULT_VAR_THRESHOLD: f64 = 100.0;
pub const DEFAULT_MAX_LAG: usize = 32;
pub const DEFAULT_TOP_N_SIGNALS: usize = 5;
pub const MIN_RIDGE_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SegmentationConfig {
    pub block: usize,
    pub var_threshold: f64,
    pub max_lag: usize,
    pub top_n_signals: usize,
    pub min_ridge_len: usize,
    pub polarity: RidgePolarity,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            block: DEFAULT_BLOCK,
            var_threshold: DEFAULT_VAR_THRESHOLD,
            max_lag: DEFAULT_MAX_LAG,
            top_n_signals: DEFAULT_TOP_N_SIGNALS,
            min_ridge_len: MIN_RIDGE_LEN,
            polarity: RidgePolarity::Dark,
        }
    }
}

/// Bilinear sample of a gray plane; `None` outside the image.
pub fn sample_bilinear(gray: &GrayFrame, x: f64, y: f64) -> Option<f64> {
    if !(x >= 0.0 && y >= 0.0) {
        return None;
    }
    let (w, h) = (gray.width, gray.height);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    if x0 >= w || y0 >= h {
        return None;
    }
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    if (x0 == w - 1 && x > x0 as f64) || (y0 == h - 1 && y > y0 as f64) {
        return None;
    }
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let p = |xx: usize, yy: usize| f64::from(gray.get(xx, yy));
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}

/// Gray plane, foreground and ridges of one frame.
#[derive(Debug, Clone)]
pub struct FrameAnalysis {
    pub gray: GrayFrame,
    pub foreground: crate::capture::Mask,
    pub ridges: RidgeExtraction,
}

impl FrameAnalysis {
    pub fn regions(&self) -> crate::capture::RegionSet {
        crate::capture::RegionSet {
            foreground: self.foreground.clone(),
            ridge_pixels: self.ridges.ridge_pixels.clone(),
            ridge_signals: self.ridges.signals.clone(),
        }
    }
}

pub fn analyze_frame(
    frame: &crate::capture::Frame,
    cfg: &SegmentationConfig,
) -> crate::error::Result<FrameAnalysis> {
    let gray = frame.to_grayscale();
    let foreground = compute_foreground_gray(&gray, cfg.block, cfg.var_threshold);
    let ridges = extract_ridges_gray(&gray, &foreground, cfg)?;
    Ok(FrameAnalysis {
        gray,
        foreground,
        ridges,
    })
}
