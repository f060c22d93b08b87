//! Static texture features of a single frame (164 values):
//! rotation-invariant LBP at radii 1 and 2 (72), the foreground intensity
//! histogram (64) and Haar multiresolution statistics of the ridge and
//! valley signals (14 + 14).

pub mod lbp;
pub mod wavelet;

pub use lbp::{lbp_code, lbp_features, lbp_histogram, RI_CLASS};
pub use wavelet::{haar_decompose, wavelet_multires_features, HaarDecomposition};

use crate::capture::{GrayFrame, Mask};
use crate::error::{PadError, Result};
use crate::histogram::{gray_histogram, BINS};
use crate::layout::STATIC_LEN;
use crate::segmentation::{sample_bilinear, FrameAnalysis, OrientationField, RidgeSignal};

#[derive(Debug, Clone, PartialEq)]
pub struct StaticFeatureBlock {
    pub lbp: Vec<f64>,
    pub intensity: [f64; BINS],
    pub wavelet_ridge: [f64; 14],
    pub wavelet_valley: [f64; 14],
}

impl StaticFeatureBlock {
    pub fn values(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(STATIC_LEN);
        v.extend_from_slice(&self.lbp);
        v.extend_from_slice(&self.intensity);
        v.extend_from_slice(&self.wavelet_ridge);
        v.extend_from_slice(&self.wavelet_valley);
        v
    }
}

/// Normalized 64-bin histogram of the masked gray levels.
pub fn intensity_features(gray: &GrayFrame, mask: &Mask) -> [f64; BINS] {
    gray_histogram(gray, mask)
}

/// Samples `gray` on points offset from `path` perpendicular to the local
/// ridge direction by `offset` pixels. The opposite side is used when the
/// first lands outside `foreground`; points with neither side available
/// are skipped.
pub fn sample_offset_path(
    gray: &GrayFrame,
    foreground: &Mask,
    orientation: &OrientationField,
    path: &[(usize, usize)],
    offset: f64,
) -> Vec<f64> {
    let inside = |x: f64, y: f64| {
        let (xi, yi) = (x.round(), y.round());
        xi >= 0.0
            && yi >= 0.0
            && (xi as usize) < foreground.width
            && (yi as usize) < foreground.height
            && foreground.get(xi as usize, yi as usize)
    };
    path.iter()
        .filter_map(|&(x, y)| {
            let theta = orientation.ridge_angle_at(x, y);
            let (nx, ny) = (-theta.sin() * offset, theta.cos() * offset);
            [1.0, -1.0].into_iter().find_map(|side| {
                let (px, py) = (x as f64 + side * nx, y as f64 + side * ny);
                if inside(px, py) {
                    sample_bilinear(gray, px, py)
                } else {
                    None
                }
            })
        })
        .collect()
}

/// Gray levels along the valley centerlines next to the `top_n` longest
/// ridge paths, offset by the mean ridge width (about half the period).
pub fn valley_signal(analysis: &FrameAnalysis, top_n: usize) -> Result<Vec<f64>> {
    valley_signal_on(&analysis.gray, analysis, top_n)
}

/// As [`valley_signal`], sampling `gray` with the geometry of `analysis`.
pub fn valley_signal_on(gray: &GrayFrame, analysis: &FrameAnalysis, top_n: usize) -> Result<Vec<f64>> {
    let ridges = &analysis.ridges;
    if ridges.signals.is_empty() {
        return Err(PadError::EmptyRidgeSet);
    }
    let top = ridges.top_signal(top_n);
    Ok(sample_offset_path(
        gray,
        &analysis.foreground,
        &ridges.orientation,
        &top.path,
        ridges.ridge_width,
    ))
}

/// Full static block of one analyzed frame.
pub fn static_features(analysis: &FrameAnalysis, top_n: usize) -> Result<StaticFeatureBlock> {
    if analysis.foreground.is_empty() {
        return Err(PadError::EmptyMask("foreground"));
    }
    let ridge: RidgeSignal = analysis.ridges.top_signal(top_n);
    let valley = valley_signal(analysis, top_n)?;
    let block = StaticFeatureBlock {
        lbp: lbp_features(&analysis.gray, &analysis.foreground),
        intensity: intensity_features(&analysis.gray, &analysis.foreground),
        wavelet_ridge: wavelet_multires_features(&ridge.samples)?,
        wavelet_valley: wavelet_multires_features(&valley)?,
    };
    if block.values().iter().any(|v| !v.is_finite()) {
        return Err(PadError::InvalidFrame("static feature is not finite".into()));
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capture::Frame;
    use crate::segmentation::{analyze_frame, SegmentationConfig};
    use proptest::prelude::*;

    fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> u8) -> GrayFrame {
        GrayFrame::new(w, h, (0..w * h).map(|i| f(i % w, i / w)).collect()).unwrap()
    }

    /// Plain trigonometric bilinear LBP, independent of the exact route.
    fn oracle_code(g: &GrayFrame, x: usize, y: usize, r: f64) -> u8 {
        let c = f64::from(g.get(x, y));
        let mut code = 0;
        for p in 0..8 {
            let a = std::f64::consts::TAU * p as f64 / 8.0;
            let (sx, sy) = (x as f64 + r * a.cos(), y as f64 - r * a.sin());
            let (x0, y0) = (sx.floor(), sy.floor());
            let (fx, fy) = (sx - x0, sy - y0);
            let px = |dx: f64, dy: f64| {
                let (xx, yy) = ((x0 + dx) as usize, (y0 + dy) as usize);
                if xx < g.width && yy < g.height {
                    f64::from(g.get(xx, yy))
                } else {
                    0.0
                }
            };
            let v = px(0.0, 0.0) * (1.0 - fx) * (1.0 - fy)
                + px(1.0, 0.0) * fx * (1.0 - fy)
                + px(0.0, 1.0) * (1.0 - fx) * fy
                + px(1.0, 1.0) * fx * fy;
            if v - c > 1e-6 {
                code |= 1 << p;
            }
        }
        code
    }

    fn oracle_histogram(g: &GrayFrame, m: &Mask, r: usize) -> [f64; lbp::CLASSES] {
        let mut counts = [0usize; lbp::CLASSES];
        let mut n = 0;
        for y in 0..g.height {
            for x in 0..g.width {
                let interior = x >= r && y >= r && x + r < g.width && y + r < g.height;
                if interior && m.get(x, y) {
                    let code = oracle_code(g, x, y, r as f64);
                    let canonical = (0..8).map(|k| code.rotate_right(k)).min().unwrap();
                    counts[usize::from(RI_CLASS[usize::from(canonical)])] += 1;
                    n += 1;
                }
            }
        }
        counts.map(|c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
    }

    #[test]
    fn single_bright_pixel_matches_oracle() {
        let g = gray(9, 9, |x, y| if (x, y) == (4, 4) { 255 } else { 10 });
        let m = Mask::full(9, 9);
        for r in lbp::RADII {
            assert_eq!(lbp_histogram(&g, &m, r), oracle_histogram(&g, &m, r));
        }
    }

    #[test]
    fn lbp_matches_oracle_on_random_images() {
        use rand::{Rng, SeedableRng};
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let (w, h) = (rng.gen_range(5..=16), rng.gen_range(5..=16));
            // Few distinct levels so exact ties are common.
            let levels = if seed % 2 == 0 { 3 } else { 256 };
            let g = gray(w, h, |_, _| 0);
            let g = GrayFrame::new(
                w,
                h,
                g.data.iter().map(|_| (rng.gen_range(0..levels) * (255 / (levels - 1).max(1))) as u8).collect(),
            )
            .unwrap();
            let m = Mask::from_fn(w, h, |x, y| (x * 7 + y * 3 + seed as usize) % 5 != 0);
            for r in lbp::RADII {
                assert_eq!(lbp_histogram(&g, &m, r), oracle_histogram(&g, &m, r), "seed {seed} r {r}");
            }
        }
    }

    #[test]
    fn lbp_is_rotation_invariant_under_quarter_turn() {
        let (w, h) = (40, 30);
        let g = gray(w, h, |x, y| {
            let v = 128.0 + 60.0 * (x as f64 * 0.7 + y as f64 * 0.3).sin() + 40.0 * ((x * y) as f64 * 0.05).cos();
            v.round() as u8
        });
        // (x, y) -> (y, w - 1 - x)
        let rot = gray(h, w, |x, y| g.get(w - 1 - y, x));
        assert_eq!(
            lbp_features(&g, &Mask::full(w, h)),
            lbp_features(&rot, &Mask::full(h, w))
        );
    }

    #[test]
    fn intensity_examples() {
        let m = Mask::full(8, 8);
        let zeros = intensity_features(&GrayFrame::filled(8, 8, 0), &m);
        assert_eq!(zeros[0], 1.0);
        assert!(zeros[1..].iter().all(|&v| v == 0.0));

        let half = intensity_features(&gray(8, 8, |x, _| if x < 4 { 0 } else { 255 }), &m);
        assert_eq!((half[0], half[63]), (0.5, 0.5));

        let ramp = intensity_features(&gray(256, 1, |x, _| x as u8), &Mask::full(256, 1));
        assert!(ramp.iter().all(|&v| (v - 1.0 / 64.0).abs() < 1e-12));
    }

    fn ridge_frame(invert: bool) -> Frame {
        let (w, h) = (128, 128);
        let g = gray(w, h, |x, y| {
            let (dx, dy) = (x as f64 - 64.0, y as f64 - 64.0);
            let inside = dx * dx / 55.0f64.powi(2) + dy * dy / 60.0f64.powi(2) <= 1.0;
            if !inside {
                return 200;
            }
            let phase = (x as f64 * 0.8 + y as f64 * 0.6) * std::f64::consts::TAU / 8.0;
            let v = 128.0 + 90.0 * phase.cos();
            (if invert { 256.0 - v } else { v }).round().clamp(0.0, 255.0) as u8
        });
        Frame::from_gray(&g, 0)
    }

    #[test]
    fn valley_brighter_than_ridge() {
        let cfg = SegmentationConfig::default();
        let a = analyze_frame(&ridge_frame(false), &cfg).unwrap();
        let ridge = a.ridges.top_signal(5).samples;
        let valley = valley_signal(&a, 5).unwrap();
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        assert!(valley.len() > ridge.len() / 2);
        assert!(mean(&valley) > mean(&ridge) + 50.0);

        // Same geometry on the inverted pattern: the inequality reverses.
        let inverted = ridge_frame(true).to_grayscale();
        let ridge_inv: Vec<f64> = a
            .ridges
            .top_signal(5)
            .path
            .iter()
            .map(|&(x, y)| f64::from(inverted.get(x, y)))
            .collect();
        let valley_inv = valley_signal_on(&inverted, &a, 5).unwrap();
        assert!(mean(&valley_inv) < mean(&ridge_inv) - 50.0);
    }

    #[test]
    fn blank_frame_has_no_ridges() {
        let f = Frame::from_gray(&GrayFrame::filled(64, 64, 120), 0);
        assert!(matches!(
            analyze_frame(&f, &SegmentationConfig::default()),
            Err(PadError::EmptyRidgeSet)
        ));
    }

    #[test]
    fn static_block_shape() {
        let a = analyze_frame(&ridge_frame(false), &SegmentationConfig::default()).unwrap();
        let b = static_features(&a, 5).unwrap();
        let v = b.values();
        assert_eq!(v.len(), STATIC_LEN);
        assert!(v.iter().all(|x| x.is_finite()));
        assert!((b.intensity.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn intensity_sums_to_one_and_ignores_outside(
            data in proptest::collection::vec(any::<u8>(), 100),
            outside in any::<u8>(),
        ) {
            let g = GrayFrame::new(10, 10, data.clone()).unwrap();
            let m = Mask::from_fn(10, 10, |x, y| x + y < 12);
            let h = intensity_features(&g, &m);
            prop_assert!((h.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            let changed: Vec<u8> = data
                .iter()
                .enumerate()
                .map(|(i, &v)| if m.as_slice()[i] { v } else { outside })
                .collect();
            prop_assert_eq!(h, intensity_features(&GrayFrame::new(10, 10, changed).unwrap(), &m));
        }
    }
}
