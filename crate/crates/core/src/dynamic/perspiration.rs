//! Ridge-signal perspiration statistics: one static spectral measure on the
//! frame-2 signal and six frame-to-frame changes.

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{PadError, Result};

pub const MIN_SIGNAL_LEN: usize = 64;
/// Guard on the denominators of the peak-growth and variance-change ratios.
pub const GUARD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerspirationConfig {
    /// Samples below `dry_fraction * 255` count as dry-saturated.
    pub dry_fraction: f64,
    /// Samples above `wet_fraction * 255` count as wet-saturated.
    pub wet_fraction: f64,
}

impl Default for PerspirationConfig {
    fn default() -> Self {
        Self {
            dry_fraction: 0.1,
            wet_fraction: 0.9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspirationFeatures {
    /// Share of the frame-2 spectral energy (DC excluded) in the upper half
    /// of the one-sided spectrum.
    pub high_freq: f64,
    pub swing_change: f64,
    pub peak_growth: f64,
    pub mean_growth: f64,
    /// Percent change in population variance.
    pub var_change: f64,
    pub dry_change: f64,
    pub wet_change: f64,
    /// A signal was constant or had no interior maximum; guarded values used.
    pub degenerate: bool,
}

impl PerspirationFeatures {
    pub fn values(&self) -> [f64; 7] {
        [
            self.high_freq,
            self.swing_change,
            self.peak_growth,
            self.mean_growth,
            self.var_change,
            self.dry_change,
            self.wet_change,
        ]
    }
}

/// Returns the ratio and whether the spectrum had no energy.
pub fn high_frequency_share(signal: &[f64]) -> (f64, bool) {
    let n = signal.len();
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let (mut total, mut upper) = (0.0, 0.0);
    for (k, c) in buf.iter().enumerate().take(half + 1).skip(1) {
        let e = c.norm_sqr();
        total += e;
        if 2 * k > half {
            upper += e;
        }
    }
    // Tiny residual energy from rounding on a constant signal.
    let scale: f64 = signal.iter().map(|v| v * v).sum::<f64>() * n as f64;
    if total <= scale * 1e-24 {
        (0.0, true)
    } else {
        (upper / total, false)
    }
}

fn swing(s: &[f64]) -> f64 {
    s.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

/// Mean of interior local maxima; falls back to the global maximum.
fn peak_mean(s: &[f64]) -> (f64, bool) {
    let peaks: Vec<f64> = (1..s.len().saturating_sub(1))
        .filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1])
        .map(|i| s[i])
        .collect();
    if peaks.is_empty() {
        (s.iter().cloned().fold(f64::MIN, f64::max), true)
    } else {
        (peaks.iter().sum::<f64>() / peaks.len() as f64, false)
    }
}

fn mean_var(s: &[f64]) -> (f64, f64) {
    let n = s.len() as f64;
    let m = s.iter().sum::<f64>() / n;
    (m, s.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n)
}

fn fraction(s: &[f64], pred: impl Fn(f64) -> bool) -> f64 {
    s.iter().filter(|&&v| pred(v)).count() as f64 / s.len() as f64
}

/// Features from realigned frame-1 and frame-2 ridge signals of equal
/// length.
pub fn perspiration_features(
    sig1: &[f64],
    sig2: &[f64],
    cfg: &PerspirationConfig,
) -> Result<PerspirationFeatures> {
    if sig1.len() != sig2.len() {
        return Err(PadError::AlignmentError {
            left: sig1.len(),
            right: sig2.len(),
        });
    }
    if sig1.len() < MIN_SIGNAL_LEN {
        return Err(PadError::SignalTooShort {
            len: sig1.len(),
            min: MIN_SIGNAL_LEN,
        });
    }
    let (high_freq, flat) = high_frequency_share(sig2);
    let (p1, d1) = peak_mean(sig1);
    let (p2, d2) = peak_mean(sig2);
    let (m1, v1) = mean_var(sig1);
    let (m2, v2) = mean_var(sig2);
    let dry = cfg.dry_fraction * 255.0;
    let wet = cfg.wet_fraction * 255.0;
    Ok(PerspirationFeatures {
        high_freq,
        swing_change: swing(sig2) - swing(sig1),
        peak_growth: p2 / (p1 + GUARD),
        mean_growth: m2 - m1,
        var_change: 100.0 * (v2 - v1) / (v1 + GUARD),
        dry_change: fraction(sig2, |v| v < dry) - fraction(sig1, |v| v < dry),
        wet_change: fraction(sig2, |v| v > wet) - fraction(sig1, |v| v > wet),
        degenerate: flat || d1 || d2 || v1 == 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn wave(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 120.0 + 50.0 * (i as f64 * 0.7).sin() + 10.0 * (i as f64 * 2.3).cos())
            .collect()
    }

    #[test]
    fn identical_signals() {
        let s = wave(128);
        let f = perspiration_features(&s, &s, &PerspirationConfig::default()).unwrap();
        assert_eq!(f.swing_change, 0.0);
        assert_eq!(f.mean_growth, 0.0);
        assert_eq!(f.var_change, 0.0);
        assert_eq!(f.dry_change, 0.0);
        assert_eq!(f.wet_change, 0.0);
        assert_relative_eq!(f.peak_growth, 1.0, max_relative = 1e-12);
        assert!(!f.degenerate);
    }

    #[test]
    fn uniform_brightening() {
        let s = wave(128);
        let t: Vec<f64> = s.iter().map(|v| v + 10.0).collect();
        let f = perspiration_features(&s, &t, &PerspirationConfig::default()).unwrap();
        assert!((f.mean_growth - 10.0).abs() < 1e-9);
        assert!(f.var_change.abs() < 1e-9);
        assert!(f.swing_change.abs() < 1e-9);
    }

    #[test]
    fn doubling_zero_mean_signal() {
        let s: Vec<f64> = wave(128).iter().map(|v| v - 120.0).collect();
        let (m, _) = mean_var(&s);
        let s: Vec<f64> = s.iter().map(|v| v - m).collect();
        let t: Vec<f64> = s.iter().map(|v| 2.0 * v).collect();
        let f = perspiration_features(&s, &t, &PerspirationConfig::default()).unwrap();
        assert!((f.var_change - 300.0).abs() < 1e-6);
    }

    #[test]
    fn saturation_changes() {
        let dry1 = vec![10.0; 32].into_iter().chain(vec![100.0; 32]).collect::<Vec<_>>();
        let dry2 = vec![100.0; 64];
        let f = perspiration_features(&dry1, &dry2, &PerspirationConfig::default()).unwrap();
        assert_eq!(f.dry_change, -0.5);
        assert_eq!(f.wet_change, 0.0);
    }

    #[test]
    fn constant_signal_is_guarded() {
        let c = vec![80.0; 64];
        let f = perspiration_features(&c, &c, &PerspirationConfig::default()).unwrap();
        assert!(f.degenerate);
        assert!(f.values().iter().all(|v| v.is_finite()));
        assert_eq!(f.high_freq, 0.0);
    }

    #[test]
    fn spectral_share_of_tones() {
        let n = 256;
        let low: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let alt: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        assert!(high_frequency_share(&low).0 < 0.05);
        assert!(high_frequency_share(&alt).0 > 0.99);
    }

    #[test]
    fn length_checks() {
        let s = wave(40);
        assert!(matches!(
            perspiration_features(&s, &s, &PerspirationConfig::default()),
            Err(PadError::SignalTooShort { .. })
        ));
        assert!(matches!(
            perspiration_features(&wave(64), &wave(65), &PerspirationConfig::default()),
            Err(PadError::AlignmentError { .. })
        ));
    }
}
