use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::normalize::fit_normalizer;
use super::roc::{apcer_at, auc, roc_curve, OperatingPoint, RocPoint};
use super::train::{spoof_scores, train, TrainConfig};
use crate::capture::Class;
use crate::error::{PadError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldPolicy {
    /// Stratified by class, every subject confined to one fold.
    SubjectGrouped,
    /// Stratified by class only.
    Stratified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub k: usize,
    pub policy: FoldPolicy,
    /// Fold of every row.
    pub fold_of: Vec<usize>,
    pub warnings: Vec<String>,
}

impl FoldAssignment {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] == fold).collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_of.len()).filter(|&i| self.fold_of[i] != fold).collect()
    }

    /// Checks that folds cover every row once, each fold tests both classes
    /// and, when grouped, no subject spans folds.
    pub fn verify(&self, labels: &[Class], subjects: &[String]) -> Result<()> {
        if self.fold_of.len() != labels.len() || self.fold_of.iter().any(|&f| f >= self.k) {
            return Err(PadError::InsufficientData("fold assignment does not cover the rows".into()));
        }
        for f in 0..self.k {
            for c in [Class::Live, Class::Spoof] {
                if !self.test_rows(f).iter().any(|&i| labels[i] == c) {
                    return Err(PadError::InsufficientData(format!("fold {f} has no {c} rows")));
                }
            }
        }
        if self.policy == FoldPolicy::SubjectGrouped {
            let mut seen: HashMap<&str, usize> = HashMap::new();
            for (s, &f) in subjects.iter().zip(&self.fold_of) {
                if *seen.entry(s).or_insert(f) != f {
                    return Err(PadError::InsufficientData(format!("subject {s} spans folds")));
                }
            }
        }
        Ok(())
    }
}

fn stratified(labels: &[Class], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for c in [Class::Live, Class::Spoof] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        idx.shuffle(rng);
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    fold_of
}

fn grouped(labels: &[Class], subjects: &[String], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut groups: BTreeMap<&str, (Vec<usize>, [usize; 2])> = BTreeMap::new();
    for (i, (s, c)) in subjects.iter().zip(labels).enumerate() {
        let g = groups.entry(s).or_default();
        g.0.push(i);
        g.1[c.index()] += 1;
    }
    let mut groups: Vec<_> = groups.into_values().collect();
    groups.shuffle(rng);
    // Largest groups first; the shuffle breaks ties.
    groups.sort_by_key(|g| std::cmp::Reverse(g.0.len()));
    let totals = [
        labels.iter().filter(|&&c| c == Class::Live).count().max(1) as f64,
        labels.iter().filter(|&&c| c == Class::Spoof).count().max(1) as f64,
    ];
    let mut counts = vec![[0usize; 2]; k];
    let mut fold_of = vec![0; labels.len()];
    for (rows, gc) in groups {
        let load = |f: usize| {
            let c = counts[f];
            let share = |j: usize| (c[j] + gc[j]) as f64 / totals[j];
            (share(0).max(share(1)), c[0] + c[1])
        };
        let best = (0..k)
            .min_by(|&a, &b| {
                let (la, na) = load(a);
                let (lb, nb) = load(b);
                la.total_cmp(&lb).then(na.cmp(&nb))
            })
            .expect("k >= 1");
        counts[best][0] += gc[0];
        counts[best][1] += gc[1];
        for i in rows {
            fold_of[i] = best;
        }
    }
    fold_of
}

/// Subject-grouped, class-stratified fold assignment. Falls back to
/// class stratification alone, with a warning, when grouping cannot give
/// every fold both classes or one fold grows past twice its fair share.
pub fn assign_folds(labels: &[Class], subjects: &[String], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(PadError::Config(format!("k must be at least 2, got {k}")));
    }
    for c in [Class::Live, Class::Spoof] {
        let n = labels.iter().filter(|&&l| l == c).count();
        if n < k {
            return Err(PadError::InsufficientData(format!(
                "{n} {c} rows cannot fill {k} folds"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fold_of = grouped(labels, subjects, k, &mut rng);
    let candidate = FoldAssignment {
        k,
        policy: FoldPolicy::SubjectGrouped,
        fold_of,
        warnings: Vec::new(),
    };
    let fair = labels.len().div_ceil(k);
    let oversized = (0..k).any(|f| candidate.test_rows(f).len() > 2 * fair);
    if !oversized && candidate.verify(labels, subjects).is_ok() {
        return Ok(candidate);
    }
    let msg = "subject-grouped folds infeasible; using class-stratified folds".to_string();
    log::warn!("{msg}");
    let out = FoldAssignment {
        k,
        policy: FoldPolicy::Stratified,
        fold_of: stratified(labels, k, &mut rng),
        warnings: vec![msg],
    };
    out.verify(labels, subjects)?;
    Ok(out)
}

/// Splits `rows` into training and validation parts, stratified by class.
pub fn validation_split(rows: &[usize], labels: &[Class], fraction: f64, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut fit = Vec::new();
    let mut val = Vec::new();
    for c in [Class::Live, Class::Spoof] {
        let mut idx: Vec<usize> = rows.iter().copied().filter(|&i| labels[i] == c).collect();
        idx.shuffle(rng);
        let n_val = (idx.len() as f64 * fraction).round() as usize;
        let n_val = n_val.min(idx.len().saturating_sub(1));
        val.extend_from_slice(&idx[..n_val]);
        fit.extend_from_slice(&idx[n_val..]);
    }
    fit.sort_unstable();
    val.sort_unstable();
    (fit, val)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub auc: f64,
    pub at_bpcer: Vec<OperatingPoint>,
    pub final_learning_rate: f64,
    pub floored_features: usize,
    pub roc: Vec<RocPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub bpcer: f64,
    pub apcer_mean: f64,
    /// Population standard deviation across folds.
    pub apcer_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub seed: u64,
    pub fold_policy: FoldPolicy,
    pub warnings: Vec<String>,
    pub n_rows: usize,
    pub n_features: usize,
    pub targets: Vec<TargetSummary>,
    pub auc_mean: f64,
    /// AUC of all out-of-fold scores pooled.
    pub auc_pooled: f64,
    pub folds: Vec<FoldReport>,
    /// Out-of-fold spoof score of every row.
    pub scores: Vec<f64>,
}

impl EvalReport {
    pub fn target(&self, bpcer: f64) -> Option<&TargetSummary> {
        self.targets.iter().find(|t| t.bpcer == bpcer)
    }
}

/// Seed of fold `fold`, derived from the master seed.
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    use rand::RngCore;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fold as u64 + 1);
    rng.next_u64()
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt())
}

/// k-fold cross validation: per fold, normalize on the training rows,
/// hold out a validation share for the plateau schedule, train and score
/// the test rows.
pub fn kfold_cv(
    x: &Matrix,
    labels: &[Class],
    subjects: &[String],
    k: usize,
    cfg: &TrainConfig,
    targets: &[f64],
) -> Result<EvalReport> {
    cfg.validate()?;
    if x.rows != labels.len() || x.rows != subjects.len() {
        return Err(PadError::InsufficientData("rows, labels and subjects differ in length".into()));
    }
    let folds = assign_folds(labels, subjects, k, cfg.seed)?;
    let spec = cfg.network_spec(x.cols);
    let y: Vec<usize> = labels.iter().map(|c| c.index()).collect();

    let results: Vec<Result<(FoldReport, Vec<(usize, f64)>)>> = (0..k)
        .into_par_iter()
        .map(|fold| {
            let seed = fold_seed(cfg.seed, fold);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let test = folds.test_rows(fold);
            let (fit, val) = validation_split(&folds.train_rows(fold), labels, cfg.validation_fraction, &mut rng);
            let stats = fit_normalizer(&x.select_rows(&fit))?;
            let fx = stats.apply(&x.select_rows(&fit))?;
            let vx = stats.apply(&x.select_rows(&val))?;
            let tx = stats.apply(&x.select_rows(&test))?;
            let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
            let (fy, vy) = (pick(&fit), pick(&val));
            let fold_cfg = TrainConfig { seed, ..cfg.clone() };
            let (net, trace) = train(&spec, &fold_cfg, &fx, &fy, Some((&vx, &vy)))?;
            let scores = spoof_scores(&net, &tx)?;
            let tl: Vec<Class> = test.iter().map(|&i| labels[i]).collect();
            let roc = roc_curve(&scores, &tl)?;
            let report = FoldReport {
                fold,
                seed,
                n_train: fit.len(),
                n_validation: val.len(),
                n_test: test.len(),
                auc: auc(&scores, &tl)?,
                at_bpcer: targets
                    .iter()
                    .map(|&b| OperatingPoint {
                        bpcer: b,
                        apcer: apcer_at(&roc, b),
                    })
                    .collect(),
                final_learning_rate: *trace.learning_rate.last().expect("epochs >= 1"),
                floored_features: stats.floored.len(),
                roc,
            };
            Ok((report, test.into_iter().zip(scores).collect()))
        })
        .collect();

    let mut reports = Vec::with_capacity(k);
    let mut scores = vec![f64::NAN; x.rows];
    for r in results {
        let (report, s) = r?;
        for (i, v) in s {
            scores[i] = v;
        }
        reports.push(report);
    }
    let summaries = targets
        .iter()
        .enumerate()
        .map(|(t, &b)| {
            let v: Vec<f64> = reports.iter().map(|r| r.at_bpcer[t].apcer).collect();
            let (m, s) = mean_std(&v);
            TargetSummary {
                bpcer: b,
                apcer_mean: m,
                apcer_std: s,
            }
        })
        .collect();
    let aucs: Vec<f64> = reports.iter().map(|r| r.auc).collect();
    Ok(EvalReport {
        k,
        seed: cfg.seed,
        fold_policy: folds.policy,
        warnings: folds.warnings,
        n_rows: x.rows,
        n_features: x.cols,
        targets: summaries,
        auc_mean: mean_std(&aucs).0,
        auc_pooled: auc(&scores, labels)?,
        folds: reports,
        scores,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(n: usize) -> (Vec<Class>, Vec<String>) {
        let labels = (0..n).map(|i| if i % 2 == 0 { Class::Live } else { Class::Spoof }).collect();
        let subjects = (0..n).map(|i| format!("s{:04}", i / 4)).collect();
        (labels, subjects)
    }

    #[test]
    fn partition_of_100_rows() {
        let (labels, subjects) = corpus(100);
        let f = assign_folds(&labels, &subjects, 10, 7).unwrap();
        assert_eq!(f.policy, FoldPolicy::SubjectGrouped);
        let mut all: Vec<usize> = (0..10).flat_map(|k| f.test_rows(k)).collect();
        all.sort_unstable();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
        for k in 0..10 {
            let n = f.test_rows(k).len();
            assert!((8..=12).contains(&n), "fold {k} has {n}");
        }
        f.verify(&labels, &subjects).unwrap();
        assert_eq!(f, assign_folds(&labels, &subjects, 10, 7).unwrap());
    }

    #[test]
    fn dominant_subject_falls_back() {
        let (labels, mut subjects) = corpus(100);
        for s in subjects.iter_mut().take(60) {
            *s = "big".into();
        }
        let f = assign_folds(&labels, &subjects, 10, 1).unwrap();
        assert_eq!(f.policy, FoldPolicy::Stratified);
        assert_eq!(f.warnings.len(), 1);
    }

    #[test]
    fn too_few_rows() {
        let (labels, subjects) = corpus(12);
        assert!(assign_folds(&labels, &subjects, 10, 1).is_err());
    }

    #[test]
    fn fold_seeds_differ() {
        let s: Vec<u64> = (0..10).map(|f| fold_seed(7, f)).collect();
        let mut u = s.clone();
        u.sort_unstable();
        u.dedup();
        assert_eq!(u.len(), 10);
        assert_eq!(s, (0..10).map(|f| fold_seed(7, f)).collect::<Vec<_>>());
    }

    #[test]
    fn perfect_feature_gives_zero_apcer() {
        let (labels, subjects) = corpus(60);
        let x = Matrix::from_vec(60, 1, labels.iter().map(|c| c.index() as f64).collect()).unwrap();
        let cfg = TrainConfig {
            hidden: vec![8],
            epochs: 30,
            batch_size: 16,
            learning_rate: 0.05,
            ..TrainConfig::default()
        };
        let r = kfold_cv(&x, &labels, &subjects, 5, &cfg, &[0.002, 0.01]).unwrap();
        assert_eq!(r.folds.len(), 5);
        for t in &r.targets {
            assert_eq!(t.apcer_mean, 0.0);
        }
        assert_eq!(r.auc_pooled, 1.0);
        assert!(r.scores.iter().all(|s| s.is_finite()));
    }
}
