//! Orthonormal Haar multiresolution statistics of 1-D signals.

use crate::error::{PadError, Result};

pub const LEVELS: usize = 7;
/// Signals are padded to at least this many samples.
pub const MIN_PADDED_LEN: usize = 256;
pub const MIN_SIGNAL_LEN: usize = 16;
pub const LOG_ENERGY_FLOOR: f64 = -30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct HaarDecomposition {
    /// `details[j]` holds level `j + 1`, finest first.
    pub details: Vec<Vec<f64>>,
    pub approximation: Vec<f64>,
}

/// Whole-sample symmetric extension of `signal` to `len` samples.
pub fn reflect_pad(signal: &[f64], len: usize) -> Vec<f64> {
    let n = signal.len();
    if n == 1 {
        return vec![signal[0]; len];
    }
    let period = 2 * (n - 1);
    (0..len)
        .map(|i| {
            let k = i % period;
            signal[if k < n { k } else { period - k }]
        })
        .collect()
}

/// `levels`-level Haar transform. The input length must be divisible by
/// `2^levels`.
pub fn haar_decompose(signal: &[f64], levels: usize) -> HaarDecomposition {
    assert!(
        signal.len() % (1 << levels) == 0,
        "length {} not divisible by 2^{levels}",
        signal.len()
    );
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d): (Vec<f64>, Vec<f64>) = approx
            .chunks_exact(2)
            .map(|p| ((p[0] + p[1]) * s, (p[0] - p[1]) * s))
            .unzip();
        details.push(d);
        approx = a;
    }
    HaarDecomposition {
        details,
        approximation: approx,
    }
}

fn padded_len(n: usize) -> usize {
    n.next_power_of_two().max(MIN_PADDED_LEN)
}

/// Per level: natural log of the mean squared detail coefficient (floored
/// at [`LOG_ENERGY_FLOOR`]) and the standard deviation of the details.
/// Level 1 first; 14 values.
pub fn wavelet_multires_features(signal: &[f64]) -> Result<[f64; 2 * LEVELS]> {
    if signal.len() < MIN_SIGNAL_LEN {
        return Err(PadError::SignalTooShort {
            len: signal.len(),
            min: MIN_SIGNAL_LEN,
        });
    }
    let padded = reflect_pad(signal, padded_len(signal.len()));
    let dec = haar_decompose(&padded, LEVELS);
    let mut out = [0.0; 2 * LEVELS];
    for (j, d) in dec.details.iter().enumerate() {
        let n = d.len() as f64;
        let energy = d.iter().map(|v| v * v).sum::<f64>() / n;
        out[2 * j] = if energy > 0.0 {
            energy.ln().max(LOG_ENERGY_FLOOR)
        } else {
            LOG_ENERGY_FLOOR
        };
        let mean = d.iter().sum::<f64>() / n;
        out[2 * j + 1] = (d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    }
    Ok(out)
}
