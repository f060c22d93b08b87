//! Error rates for presentation-attack detection.
//!
//! A score is the spoof probability and a presentation is declared a spoof
//! when `score >= t`. BPCER is the share of live presentations declared
//! spoof; APCER the share of spoofs declared live.

use serde::{Deserialize, Serialize};

use crate::capture::Class;
use crate::error::{PadError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// `f64::INFINITY` for the point that declares nothing a spoof.
    #[serde(with = "inf_as_string")]
    pub threshold: f64,
    pub bpcer: f64,
    pub apcer: f64,
}

mod inf_as_string {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            Repr::Text(if *v > 0.0 { "inf" } else { "-inf" }.into()).serialize(s)
        } else {
            Repr::Num(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub bpcer: f64,
    pub apcer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocMetrics {
    pub points: Vec<RocPoint>,
    pub at_bpcer: Vec<OperatingPoint>,
    pub auc: f64,
}

fn split(scores: &[f64], labels: &[Class]) -> Result<(Vec<f64>, Vec<f64>)> {
    if scores.len() != labels.len() {
        return Err(PadError::MetricsUndefined(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(PadError::MetricsUndefined(format!("score {s}")));
    }
    let live: Vec<f64> = scores.iter().zip(labels).filter(|p| *p.1 == Class::Live).map(|p| *p.0).collect();
    let spoof: Vec<f64> = scores.iter().zip(labels).filter(|p| *p.1 == Class::Spoof).map(|p| *p.0).collect();
    if live.is_empty() || spoof.is_empty() {
        return Err(PadError::MetricsUndefined(
            "both live and spoof presentations are required".into(),
        ));
    }
    Ok((live, spoof))
}

/// ROC points for `+inf` followed by every distinct score in decreasing
/// order, so BPCER is non-decreasing and APCER non-increasing.
pub fn roc_curve(scores: &[f64], labels: &[Class]) -> Result<Vec<RocPoint>> {
    let (mut live, mut spoof) = split(scores, labels)?;
    live.sort_by(|a, b| b.total_cmp(a));
    spoof.sort_by(|a, b| b.total_cmp(a));
    let mut thresholds: Vec<f64> = live.iter().chain(&spoof).copied().collect();
    thresholds.sort_by(|a, b| b.total_cmp(a));
    thresholds.dedup();
    let (nl, ns) = (live.len() as f64, spoof.len() as f64);
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        bpcer: 0.0,
        apcer: 1.0,
    }];
    let (mut li, mut si) = (0, 0);
    for t in thresholds {
        while li < live.len() && live[li] >= t {
            li += 1;
        }
        while si < spoof.len() && spoof[si] >= t {
            si += 1;
        }
        points.push(RocPoint {
            threshold: t,
            bpcer: li as f64 / nl,
            apcer: (spoof.len() - si) as f64 / ns,
        });
    }
    Ok(points)
}

/// APCER at a target BPCER: starting from the lowest threshold whose BPCER
/// is within the target, interpolate linearly toward the next ROC point.
pub fn apcer_at(points: &[RocPoint], target_bpcer: f64) -> f64 {
    let k = points
        .iter()
        .rposition(|p| p.bpcer <= target_bpcer)
        .expect("first ROC point has BPCER 0");
    let p = points[k];
    match points.get(k + 1) {
        Some(q) if q.bpcer > p.bpcer => {
            let f = (target_bpcer - p.bpcer) / (q.bpcer - p.bpcer);
            p.apcer + f * (q.apcer - p.apcer)
        }
        _ => p.apcer,
    }
}

/// Probability that a spoof outscores a live presentation, ties counting
/// one half.
pub fn auc(scores: &[f64], labels: &[Class]) -> Result<f64> {
    let (live, spoof) = split(scores, labels)?;
    let mut all: Vec<(f64, bool)> = live
        .iter()
        .map(|&s| (s, false))
        .chain(spoof.iter().map(|&s| (s, true)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Mann-Whitney U from mid-ranks.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let mid = (i + j + 1) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|p| p.1).count() as f64;
        i = j;
    }
    let (nl, ns) = (live.len() as f64, spoof.len() as f64);
    Ok((rank_sum - ns * (ns + 1.0) / 2.0) / (nl * ns))
}

pub fn roc_metrics(scores: &[f64], labels: &[Class], targets: &[f64]) -> Result<RocMetrics> {
    let points = roc_curve(scores, labels)?;
    let at_bpcer = targets
        .iter()
        .map(|&b| OperatingPoint {
            bpcer: b,
            apcer: apcer_at(&points, b),
        })
        .collect();
    Ok(RocMetrics {
        points,
        at_bpcer,
        auc: auc(scores, labels)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn labeled(live: &[f64], spoof: &[f64]) -> (Vec<f64>, Vec<Class>) {
        let s = live.iter().chain(spoof).copied().collect();
        let l = live
            .iter()
            .map(|_| Class::Live)
            .chain(spoof.iter().map(|_| Class::Spoof))
            .collect();
        (s, l)
    }

    /// Rates at one threshold by direct counting.
    fn rates(scores: &[f64], labels: &[Class], t: f64) -> (f64, f64) {
        let count = |c: Class, spoofed: bool| {
            scores
                .iter()
                .zip(labels)
                .filter(|p| *p.1 == c && (*p.0 >= t) == spoofed)
                .count() as f64
        };
        let nl = labels.iter().filter(|&&c| c == Class::Live).count() as f64;
        let ns = labels.len() as f64 - nl;
        (count(Class::Live, true) / nl, count(Class::Spoof, false) / ns)
    }

    /// Every candidate threshold checked by counting, independent of the
    /// sorted sweep.
    fn oracle(scores: &[f64], labels: &[Class], target: f64) -> (Vec<(f64, f64, f64)>, f64) {
        let mut ts: Vec<f64> = scores.to_vec();
        ts.push(f64::INFINITY);
        ts.sort_by(|a, b| b.total_cmp(a));
        ts.dedup();
        let pts: Vec<(f64, f64, f64)> = ts
            .iter()
            .map(|&t| {
                let (b, a) = rates(scores, labels, t);
                (t, b, a)
            })
            .collect();
        let feasible_min = ts
            .iter()
            .copied()
            .filter(|&t| rates(scores, labels, t).0 <= target)
            .fold(f64::INFINITY, f64::min);
        let (b0, a0) = rates(scores, labels, feasible_min);
        let next = ts.iter().copied().filter(|&t| t < feasible_min).fold(f64::NEG_INFINITY, f64::max);
        let apcer = if next == f64::NEG_INFINITY {
            a0
        } else {
            let (b1, a1) = rates(scores, labels, next);
            a0 + (target - b0) / (b1 - b0) * (a1 - a0)
        };
        (pts, apcer)
    }

    #[test]
    fn separated_scores() {
        let (s, l) = labeled(&[0.1, 0.2], &[0.8, 0.9]);
        let m = roc_metrics(&s, &l, &[0.002, 0.01]).unwrap();
        assert!(m.at_bpcer.iter().all(|p| p.apcer == 0.0));
        assert_eq!(m.auc, 1.0);
    }

    #[test]
    fn equal_scores() {
        let (s, l) = labeled(&[0.5, 0.5], &[0.5, 0.5, 0.5]);
        let pts = roc_curve(&s, &l).unwrap();
        let at_zero: Vec<_> = pts.iter().filter(|p| p.bpcer == 0.0).collect();
        assert!(at_zero.iter().all(|p| p.apcer == 1.0));
        assert_eq!(auc(&s, &l).unwrap(), 0.5);
    }

    #[test]
    fn hand_set_matches_oracle() {
        let (s, l) = labeled(&[0.1, 0.4, 0.6], &[0.5, 0.7, 0.9]);
        for target in [0.0, 0.002, 0.01, 0.2, 1.0 / 3.0, 0.5, 1.0] {
            let (pts, apcer) = oracle(&s, &l, target);
            let roc = roc_curve(&s, &l).unwrap();
            let got: Vec<_> = roc.iter().map(|p| (p.threshold, p.bpcer, p.apcer)).collect();
            assert_eq!(got, pts);
            assert!((apcer_at(&roc, target) - apcer).abs() < 1e-12);
        }
        // 8 of 9 pairs ordered correctly.
        assert!((auc(&s, &l).unwrap() - 8.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn random_sets_match_oracle() {
        for seed in 0..100u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=50);
            let mut labels: Vec<Class> = (0..n).map(|_| if rng.gen_bool(0.5) { Class::Spoof } else { Class::Live }).collect();
            labels[0] = Class::Live;
            labels[1] = Class::Spoof;
            // Coarse scores so ties occur.
            let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(0..12)) / 11.0).collect();
            let roc = roc_curve(&scores, &labels).unwrap();
            for target in [0.002, 0.01, 0.1, 0.25] {
                let (pts, apcer) = oracle(&scores, &labels, target);
                let got: Vec<_> = roc.iter().map(|p| (p.threshold, p.bpcer, p.apcer)).collect();
                assert_eq!(got, pts, "seed {seed}");
                assert!((apcer_at(&roc, target) - apcer).abs() < 1e-12, "seed {seed}");
            }
        }
    }

    #[test]
    fn single_class_is_undefined() {
        let (s, l) = labeled(&[0.1, 0.2], &[]);
        assert!(matches!(roc_curve(&s, &l), Err(PadError::MetricsUndefined(_))));
    }

    proptest! {
        #[test]
        fn monotone_and_transform_invariant(
            raw in proptest::collection::vec((0u8..20, any::<bool>()), 2..50),
        ) {
            let mut labels: Vec<Class> = raw.iter().map(|p| if p.1 { Class::Spoof } else { Class::Live }).collect();
            labels[0] = Class::Live;
            labels[1] = Class::Spoof;
            let scores: Vec<f64> = raw.iter().map(|p| f64::from(p.0) / 19.0).collect();
            let roc = roc_curve(&scores, &labels).unwrap();
            for w in roc.windows(2) {
                prop_assert!(w[1].bpcer >= w[0].bpcer);
                prop_assert!(w[1].apcer <= w[0].apcer);
            }
            let warped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp()).collect();
            let roc2 = roc_curve(&warped, &labels).unwrap();
            let rates = |r: &[RocPoint]| r.iter().map(|p| (p.bpcer, p.apcer)).collect::<Vec<_>>();
            prop_assert_eq!(rates(&roc), rates(&roc2));
            prop_assert_eq!(auc(&scores, &labels).unwrap(), auc(&warped, &labels).unwrap());
            for t in [0.002, 0.01] {
                prop_assert_eq!(apcer_at(&roc, t), apcer_at(&roc2, t));
            }
        }
    }
}
