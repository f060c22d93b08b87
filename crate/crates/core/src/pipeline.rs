//! Stage orchestration shared by the command-line tool and tests.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::capture::CaptureSequence;
use crate::classifier::{kfold_cv, roc_metrics, EvalReport, ModelBundle, RocMetrics, RocPoint, TrainTrace};
use crate::config::RunConfig;
use crate::error::{PadError, Result};
use crate::features::{extract_sequences, ExtractionConfig, ExtractionLog, FeatureTable};
use crate::layout::{FeatureLayout, FeatureSet};

/// Writes ROC points as `threshold,bpcer,apcer` after a `#` line carrying
/// the run-config hash; the infinite threshold is written `inf`.
pub fn write_roc_csv(points: &[RocPoint], set: FeatureSet, run_config_hash: &str, w: impl Write) -> Result<()> {
    let mut w = std::io::BufWriter::new(w);
    writeln!(w, "# padpipe roc set={set} run_config={run_config_hash}")?;
    let mut cw = csv::Writer::from_writer(w);
    cw.write_record(["threshold", "bpcer", "apcer"])?;
    for p in points {
        cw.write_record([p.threshold.to_string(), p.bpcer.to_string(), p.apcer.to_string()])?;
    }
    cw.flush()?;
    Ok(())
}

pub fn save_roc_csv(points: &[RocPoint], set: FeatureSet, run_config_hash: &str, path: &Path) -> Result<()> {
    write_roc_csv(points, set, run_config_hash, std::fs::File::create(path)?)
}

pub fn save_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn check_layout(table: &FeatureTable, set: FeatureSet) -> Result<FeatureTable> {
    let t = table.select(set)?;
    let expected = FeatureLayout::new(set).hash();
    if t.layout_hash() != expected {
        return Err(PadError::LayoutMismatch {
            expected,
            found: t.layout_hash(),
        });
    }
    Ok(t)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub run_config_hash: String,
    pub features_run_config_hash: String,
    pub set: FeatureSet,
    pub layout_hash: String,
    pub cross_validation: EvalReport,
    /// History of the model trained on all rows.
    pub final_model: TrainTrace,
}

/// Cross-validates on `table` and trains a final model on all its rows.
pub fn train_with_cv(table: &FeatureTable, set: FeatureSet, cfg: &RunConfig) -> Result<(ModelBundle, TrainReport)> {
    let t = check_layout(table, set)?;
    let x = t.matrix();
    let labels = t.labels();
    let tc = cfg.train();
    let cv = kfold_cv(&x, &labels, &t.subjects(), cfg.k, &tc, &cfg.bpcer)?;
    let (model, trace) = ModelBundle::fit(set, &t.layout_hash(), &x, &labels, &tc, &cfg.hash())?;
    Ok((
        model,
        TrainReport {
            run_config_hash: cfg.hash(),
            features_run_config_hash: t.run_config_hash.clone(),
            set,
            layout_hash: t.layout_hash(),
            cross_validation: cv,
            final_model: trace,
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutput {
    pub run_config_hash: String,
    pub model_run_config_hash: String,
    pub set: FeatureSet,
    pub layout_hash: String,
    pub n_rows: usize,
    pub metrics: RocMetrics,
}

/// Scores `table` with a trained model. The table must contain the model's
/// layout (directly or inside fused columns).
pub fn evaluate_model(model: &ModelBundle, table: &FeatureTable, targets: &[f64], run_config_hash: &str) -> Result<EvalOutput> {
    let set = model.header.set;
    let t = table.select(set)?;
    let scores = model.predict(&t.matrix(), &t.layout_hash())?;
    Ok(EvalOutput {
        run_config_hash: run_config_hash.to_string(),
        model_run_config_hash: model.header.run_config_hash.clone(),
        set,
        layout_hash: t.layout_hash(),
        n_rows: t.rows.len(),
        metrics: roc_metrics(&scores, &t.labels(), targets)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetReport {
    pub set: FeatureSet,
    pub layout_hash: String,
    pub auc_pooled: f64,
    /// ROC of the pooled out-of-fold scores.
    pub pooled_roc: Vec<RocPoint>,
    pub cross_validation: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndToEndReport {
    pub run_config_hash: String,
    pub run_config: RunConfig,
    pub extraction: ExtractionSummary,
    pub sets: Vec<SetReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub total: usize,
    pub extracted: usize,
    pub failed: usize,
}

impl EndToEndReport {
    pub fn set(&self, set: FeatureSet) -> Option<&SetReport> {
        self.sets.iter().find(|s| s.set == set)
    }
}

/// Cross-validates every feature set on a fused table.
pub fn evaluate_sets(fused: &FeatureTable, cfg: &RunConfig) -> Result<Vec<SetReport>> {
    FeatureSet::ALL
        .iter()
        .map(|&set| {
            let t = check_layout(fused, set)?;
            let labels = t.labels();
            let cv = kfold_cv(&t.matrix(), &labels, &t.subjects(), cfg.k, &cfg.train(), &cfg.bpcer)
                .map_err(|e| stage(&format!("cross-validation ({set})"), e))?;
            let pooled_roc = crate::classifier::roc_curve(&cv.scores, &labels)?;
            Ok(SetReport {
                set,
                layout_hash: t.layout_hash(),
                auc_pooled: cv.auc_pooled,
                pooled_roc,
                cross_validation: cv,
            })
        })
        .collect()
}

/// Prefixes an error with the pipeline stage it came from, keeping its
/// kind.
pub fn stage(name: &str, e: PadError) -> PadError {
    match e {
        PadError::Config(m) => PadError::Config(format!("{name}: {m}")),
        PadError::InsufficientData(m) => PadError::InsufficientData(format!("{name}: {m}")),
        PadError::MetricsUndefined(m) => PadError::MetricsUndefined(format!("{name}: {m}")),
        PadError::TrainingDiverged { epoch, batch, detail } => PadError::TrainingDiverged {
            epoch,
            batch,
            detail: format!("{name}: {detail}"),
        },
        other => other,
    }
}

/// Extraction, cross validation of all three feature sets and report
/// files in `out_dir`: `features_fused.csv`, `extraction_log.json`,
/// `roc_{static,dynamic,fused}.csv` and `report.json`.
pub fn end_to_end(
    cfg: &RunConfig,
    sequences: &[CaptureSequence],
    loading: Option<(crate::ingest::CleaningReport, Vec<crate::ingest::EntryFailure>)>,
    out_dir: &Path,
    debug_dir: Option<&Path>,
) -> Result<EndToEndReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let hash = cfg.hash();
    let (table, mut log) = extract_sequences(sequences, FeatureSet::Fused, &ExtractionConfig::from(cfg), &hash, debug_dir);
    if let Some((report, failures)) = loading {
        log = log.with_loading(report, failures);
    }
    table.save(&out_dir.join("features_fused.csv"))?;
    log.write(&out_dir.join("extraction_log.json"))?;
    log.check_failure_rate(cfg.max_failure_fraction)
        .map_err(|e| stage("extraction", e))?;

    let sets = evaluate_sets(&table, cfg)?;
    for s in &sets {
        save_roc_csv(&s.pooled_roc, s.set, &hash, &out_dir.join(format!("roc_{}.csv", s.set)))?;
    }
    let report = EndToEndReport {
        run_config_hash: hash,
        run_config: cfg.clone(),
        extraction: summary(&log),
        sets,
    };
    save_json(&report, &out_dir.join("report.json"))?;
    Ok(report)
}

fn summary(log: &ExtractionLog) -> ExtractionSummary {
    ExtractionSummary {
        total: log.total,
        extracted: log.extracted,
        failed: log.failed,
    }
}
