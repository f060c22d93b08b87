//! 64-bin gray-level histograms (4 levels per bin).

use crate::capture::{GrayFrame, Mask};

pub const BINS: usize = 64;
pub const LEVELS_PER_BIN: usize = 4;

/// Normalized histogram of the masked gray values; all zeros for an empty
/// mask.
pub fn gray_histogram(gray: &GrayFrame, mask: &Mask) -> [f64; BINS] {
    let mut counts = [0u64; BINS];
    let mut n = 0u64;
    for i in mask.indices() {
        counts[usize::from(gray.data[i]) / LEVELS_PER_BIN] += 1;
        n += 1;
    }
    let mut out = [0.0; BINS];
    if n > 0 {
        for (o, &c) in out.iter_mut().zip(&counts) {
            *o = c as f64 / n as f64;
        }
    }
    out
}

/// Gray level at the center of a bin.
pub fn bin_center(bin: usize) -> f64 {
    (bin * LEVELS_PER_BIN) as f64 + (LEVELS_PER_BIN as f64 - 1.0) / 2.0
}

pub fn histogram_mean(h: &[f64; BINS]) -> f64 {
    h.iter().enumerate().map(|(b, &p)| p * bin_center(b)).sum()
}

pub fn histogram_energy(h: &[f64; BINS]) -> f64 {
    h.iter().map(|p| p * p).sum()
}

/// Shannon entropy in bits.
pub fn histogram_entropy(h: &[f64; BINS]) -> f64 {
    -h.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}
