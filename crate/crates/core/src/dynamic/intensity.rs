//! Frame-to-frame change of the foreground gray-level histogram.

use crate::capture::{GrayFrame, Mask};
use crate::error::{PadError, Result};
use crate::histogram::{
    gray_histogram, histogram_energy, histogram_entropy, histogram_mean, BINS,
};

/// Bins summed for the dark-third shift (inclusive).
pub const DARK_BINS: std::ops::RangeInclusive<usize> = 0..=20;
/// Bins summed for the light-third shift (inclusive).
pub const LIGHT_BINS: std::ops::RangeInclusive<usize> = 43..=63;

/// Six statistics of `d = h2 - h1`:
/// total variation, dark-third mass shift, light-third mass shift,
/// mean-intensity shift, energy change and entropy change (bits).
pub fn intensity_dynamic_features(
    gray1: &GrayFrame,
    gray2: &GrayFrame,
    mask1: &Mask,
    mask2: &Mask,
) -> Result<[f64; 6]> {
    if mask1.is_empty() || mask2.is_empty() {
        return Err(PadError::EmptyMask("foreground"));
    }
    let h1 = gray_histogram(gray1, mask1);
    let h2 = gray_histogram(gray2, mask2);
    let d: Vec<f64> = (0..BINS).map(|b| h2[b] - h1[b]).collect();
    Ok([
        d.iter().map(|v| v.abs()).sum(),
        d[DARK_BINS].iter().sum(),
        d[LIGHT_BINS].iter().sum(),
        histogram_mean(&h2) - histogram_mean(&h1),
        histogram_energy(&h2) - histogram_energy(&h1),
        histogram_entropy(&h2) - histogram_entropy(&h1),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(offset: i32) -> GrayFrame {
        let (w, h) = (32, 16);
        let data = (0..w * h)
            .map(|i| (40 + ((i % w) * 5) as i32 + offset).clamp(0, 255) as u8)
            .collect();
        GrayFrame::new(w, h, data).unwrap()
    }

    #[test]
    fn identical_frames() {
        let g = ramp(0);
        let m = Mask::full(32, 16);
        assert_eq!(intensity_dynamic_features(&g, &g, &m, &m).unwrap(), [0.0; 6]);
    }

    #[test]
    fn uniform_darkening() {
        let m = Mask::full(32, 16);
        let f = intensity_dynamic_features(&ramp(0), &ramp(-32), &m, &m).unwrap();
        assert!((f[3] + 32.0).abs() <= 1.0, "mean shift {}", f[3]);
        // Mass moves toward the dark end.
        assert!(f[1] > 0.0);
    }

    #[test]
    fn flatter_histogram_raises_entropy() {
        let (w, h) = (64, 8);
        let m = Mask::full(w, h);
        let peaked = GrayFrame::new(w, h, (0..w * h).map(|i| 100 + (i % 2) as u8 * 4).collect()).unwrap();
        let flat = GrayFrame::new(w, h, (0..w * h).map(|i| ((i % w) * 4) as u8).collect()).unwrap();
        let f = intensity_dynamic_features(&peaked, &flat, &m, &m).unwrap();
        assert!(f[5] > 0.0);
        assert!(f[4] < 0.0);
    }
}
