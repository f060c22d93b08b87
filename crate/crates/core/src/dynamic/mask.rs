//! Foreground/background area features of the two selected masks.

use crate::capture::Mask;

/// Added to the second ratio in the ratio-change feature.
pub const RS_EPSILON: f64 = 0.0001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskFeatures {
    /// Foreground/background ratio of frame 1.
    pub r1: f64,
    pub r2: f64,
    /// `r1 / (r2 + 0.0001)`.
    pub rs: f64,
    /// Background area of frame 2 minus that of frame 1.
    pub delta_back: f64,
    /// Pixels whose mask value differs between the frames.
    pub shift: f64,
    pub delta_fore: f64,
    /// Set when a mask had no background and the ratio denominator was
    /// bumped by one pixel.
    pub guarded: bool,
}

impl MaskFeatures {
    pub fn values(&self) -> [f64; 6] {
        [
            self.r1,
            self.r2,
            self.rs,
            self.delta_back,
            self.shift,
            self.delta_fore,
        ]
    }
}

fn areas(mask: &Mask) -> (f64, f64) {
    let fore = mask.count();
    (fore as f64, (mask.len() - fore) as f64)
}

fn ratio(fore: f64, back: f64) -> (f64, bool) {
    if back == 0.0 {
        (fore / (back + 1.0), true)
    } else {
        (fore / back, false)
    }
}

pub fn mask_features(mask1: &Mask, mask2: &Mask) -> MaskFeatures {
    let (fore1, back1) = areas(mask1);
    let (fore2, back2) = areas(mask2);
    let (r1, g1) = ratio(fore1, back1);
    let (r2, g2) = ratio(fore2, back2);
    MaskFeatures {
        r1,
        r2,
        rs: r1 / (r2 + RS_EPSILON),
        delta_back: back2 - back1,
        shift: mask1.xor(mask2).count() as f64,
        delta_fore: fore2 - fore1,
        guarded: g1 || g2,
    }
}
