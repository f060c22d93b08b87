//! Choice of the beginning and ending frames used by the dynamic features.

use serde::{Deserialize, Serialize};

use crate::capture::CaptureSequence;
use crate::error::{PadError, Result};
use crate::ingest::blank_flags;

/// Minimum time between the two selected frames.
pub const MIN_PAIR_GAP_MS: u64 = 625;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FramePair {
    pub f1_index: usize,
    pub f2_index: usize,
    pub dt_ms: u64,
    /// Set when no non-blank frame lies at least [`MIN_PAIR_GAP_MS`] after
    /// `f1` and the last non-blank frame was used instead.
    pub gap_shortfall: bool,
}

/// Selection from precomputed blank flags and timestamps.
pub fn select_from_flags(blank: &[bool], timestamps: &[u64]) -> Result<FramePair> {
    assert_eq!(blank.len(), timestamps.len());
    let f1 = blank
        .iter()
        .position(|&b| !b)
        .ok_or(PadError::NoUsableFrames)?;
    let t1 = timestamps[f1];
    let qualifying = (f1 + 1..blank.len())
        .find(|&k| !blank[k] && timestamps[k].saturating_sub(t1) >= MIN_PAIR_GAP_MS);
    let (f2, gap_shortfall) = match qualifying {
        Some(k) => (k, false),
        None => {
            let last = (f1 + 1..blank.len())
                .rev()
                .find(|&k| !blank[k])
                .ok_or(PadError::InsufficientFrames {
                    needed: 2,
                    found: 1,
                })?;
            (last, true)
        }
    };
    Ok(FramePair {
        f1_index: f1,
        f2_index: f2,
        dt_ms: timestamps[f2] - t1,
        gap_shortfall,
    })
}

/// F1 is the earliest non-blank frame; F2 the earliest non-blank frame at
/// least 625 ms later, falling back to the last non-blank frame.
pub fn select_frames(seq: &CaptureSequence, sigma_threshold: f64) -> Result<FramePair> {
    select_from_flags(&blank_flags(seq, sigma_threshold), &seq.timestamps())
}
