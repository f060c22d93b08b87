//! Accumulated red-channel frame differences ("delta image").

use crate::capture::{Channel, Frame, Mask};
use crate::error::{PadError, Result};

/// Cap on each squared per-pixel difference.
pub const PRESS_CLAMP: f64 = 255.0;

/// `min((red_i - red_{i+1})^2, 255)` per pixel.
pub fn press(a: &Frame, b: &Frame) -> Vec<f64> {
    a.plane(Channel::Red)
        .iter()
        .zip(b.plane(Channel::Red))
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            (d * d).min(PRESS_CLAMP)
        })
        .collect()
}

/// Root of the summed clamped squared differences over consecutive frames.
pub fn delta_image(frames: &[&Frame]) -> Result<Vec<f64>> {
    if frames.len() < 2 {
        return Err(PadError::InsufficientFrames {
            needed: 2,
            found: frames.len(),
        });
    }
    let mut acc = vec![0.0; frames[0].width() * frames[0].height()];
    for pair in frames.windows(2) {
        for (a, p) in acc.iter_mut().zip(press(pair[0], pair[1])) {
            *a += p;
        }
    }
    acc.iter_mut().for_each(|v| *v = v.sqrt());
    Ok(acc)
}

/// Mean of the delta image over `mask`, normally the union of the
/// foregrounds of the frames used.
pub fn delta_image_feature(frames: &[&Frame], mask: &Mask) -> Result<f64> {
    let img = delta_image(frames)?;
    let (sum, n) = mask
        .indices()
        .fold((0.0, 0usize), |(s, n), i| (s + img[i], n + 1));
    if n == 0 {
        return Err(PadError::EmptyMask("union foreground"));
    }
    Ok(sum / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn red(values: Vec<u8>, k: u64) -> Frame {
        let n = values.len();
        Frame::new(n, 1, values, vec![0; n], vec![0; n], k * 125).unwrap()
    }

    #[test]
    fn static_sequence_is_zero() {
        let f: Vec<_> = (0..8).map(|k| red(vec![40, 50, 60], k)).collect();
        let refs: Vec<_> = f.iter().collect();
        assert_eq!(delta_image_feature(&refs, &Mask::full(3, 1)).unwrap(), 0.0);
    }

    #[test]
    fn unit_steps_give_sqrt7() {
        let f: Vec<_> = (0..8u8).map(|k| red(vec![100 + k; 4], k.into())).collect();
        let refs: Vec<_> = f.iter().collect();
        let img = delta_image(&refs).unwrap();
        assert!(img.iter().all(|&v| (v - 7f64.sqrt()).abs() < 1e-12));
        let feat = delta_image_feature(&refs, &Mask::full(4, 1)).unwrap();
        assert!((feat - 2.6458).abs() < 1e-4);
    }

    #[test]
    fn clamp_on_full_swing() {
        let mut f: Vec<_> = (0..8).map(|k| red(vec![0, 0], k)).collect();
        f[4] = red(vec![255, 0], 4);
        f[5] = red(vec![255, 0], 5);
        f[6] = red(vec![255, 0], 6);
        f[7] = red(vec![255, 0], 7);
        let refs: Vec<_> = f.iter().collect();
        let img = delta_image(&refs).unwrap();
        assert!((img[0] - 255f64.sqrt()).abs() < 1e-12);
        assert_eq!(img[1], 0.0);
    }

    #[test]
    fn needs_two_frames() {
        let f = red(vec![1], 0);
        assert!(matches!(
            delta_image(&[&f]),
            Err(PadError::InsufficientFrames { needed: 2, found: 1 })
        ));
    }

    proptest! {
        #[test]
        fn press_never_exceeds_clamp(a in proptest::collection::vec(any::<u8>(), 16), b in proptest::collection::vec(any::<u8>(), 16)) {
            let p = press(&red(a, 0), &red(b, 1));
            prop_assert!(p.iter().all(|&v| (0.0..=PRESS_CLAMP).contains(&v)));
        }
    }
}
