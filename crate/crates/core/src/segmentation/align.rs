use crate::error::{PadError, Result};

/// Result of aligning two signals by normalized cross-correlation.
///
/// `lag` is the offset into the second signal: sample `i` of the first is
/// paired with sample `i + lag` of the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alignment {
    pub lag: isize,
    pub start1: usize,
    pub start2: usize,
    pub len: usize,
    pub correlation: f64,
    /// Set when either signal is constant and no correlation exists.
    pub degenerate: bool,
}

impl Alignment {
    /// Applies the alignment to any pair of sequences indexed like the
    /// signals it was computed from.
    pub fn apply<'a, T>(&self, a: &'a [T], b: &'a [T]) -> (&'a [T], &'a [T]) {
        (
            &a[self.start1..self.start1 + self.len],
            &b[self.start2..self.start2 + self.len],
        )
    }
}

fn overlap(n1: usize, n2: usize, lag: isize) -> (usize, usize, usize) {
    let start1 = if lag < 0 { (-lag) as usize } else { 0 };
    let start2 = if lag > 0 { lag as usize } else { 0 };
    let len = (n1.saturating_sub(start1)).min(n2.saturating_sub(start2));
    (start1, start2, len)
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    if a.is_empty() {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

fn is_constant(s: &[f64]) -> bool {
    s.windows(2).all(|w| w[0] == w[1])
}

/// Finds the lag in `[-max_lag, max_lag]` maximizing the Pearson
/// correlation of the overlapping parts. Ties go to the smaller `|lag|`,
/// then to the negative lag.
pub fn realign_signals(s1: &[f64], s2: &[f64], max_lag: usize) -> Result<Alignment> {
    let min = 2 * max_lag;
    for len in [s1.len(), s2.len()] {
        if len < min.max(1) {
            return Err(PadError::SignalTooShort { len, min: min.max(1) });
        }
    }
    if is_constant(s1) || is_constant(s2) {
        let (start1, start2, len) = overlap(s1.len(), s2.len(), 0);
        return Ok(Alignment {
            lag: 0,
            start1,
            start2,
            len,
            correlation: 0.0,
            degenerate: true,
        });
    }
    let mut best: Option<(isize, f64)> = None;
    let max_lag = max_lag as isize;
    let order = std::iter::once(0).chain((1..=max_lag).flat_map(|k| [-k, k]));
    for lag in order {
        let (a, b, len) = overlap(s1.len(), s2.len(), lag);
        if len == 0 {
            continue;
        }
        if let Some(c) = pearson(&s1[a..a + len], &s2[b..b + len]) {
            if best.map_or(true, |(_, bc)| c > bc) {
                best = Some((lag, c));
            }
        }
    }
    let (lag, correlation, degenerate) = match best {
        Some((lag, c)) => (lag, c, false),
        None => (0, 0.0, true),
    };
    let (start1, start2, len) = overlap(s1.len(), s2.len(), lag);
    Ok(Alignment {
        lag,
        start1,
        start2,
        len,
        correlation,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn noise(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.gen_range(0.0..255.0)).collect()
    }

    /// `shifted[i] = base[i - k]`, both windows cut from a longer signal.
    fn window_pair(seed: u64, n: usize, k: isize, margin: usize) -> (Vec<f64>, Vec<f64>) {
        let base = noise(seed, n + 2 * margin);
        let s1 = base[margin..margin + n].to_vec();
        let start = (margin as isize - k) as usize;
        let s2 = base[start..start + n].to_vec();
        (s1, s2)
    }

    #[test]
    fn self_alignment_is_zero() {
        let s = noise(3, 128);
        let a = realign_signals(&s, &s, 32).unwrap();
        assert_eq!(a.lag, 0);
        assert_eq!(a.len, 128);
        assert!(!a.degenerate);
    }

    #[test]
    fn shift_by_five() {
        let (s1, s2) = window_pair(11, 200, 5, 40);
        let a = realign_signals(&s1, &s2, 32).unwrap();
        assert_eq!(a.lag, 5);
        let (x, y) = a.apply(&s1, &s2);
        assert_eq!(x.len(), y.len());
        assert_eq!(x, y);
    }

    #[test]
    fn constant_signal_is_degenerate() {
        let s1 = vec![7.0; 100];
        let s2 = noise(1, 100);
        let a = realign_signals(&s1, &s2, 32).unwrap();
        assert_eq!(a.lag, 0);
        assert!(a.degenerate);
    }

    #[test]
    fn short_signal_rejected() {
        let s = noise(1, 40);
        assert!(matches!(
            realign_signals(&s, &s, 32),
            Err(PadError::SignalTooShort { .. })
        ));
    }

    proptest! {
        #[test]
        fn recovers_any_shift(seed in any::<u64>(), k in -32isize..=32, n in 64usize..300) {
            let (s1, s2) = window_pair(seed, n, k, 40);
            let a = realign_signals(&s1, &s2, 32).unwrap();
            prop_assert_eq!(a.lag, k);
            let (x, y) = a.apply(&s1, &s2);
            prop_assert_eq!(x, y);
        }
    }
}
