//! `padpipe`: clean, extract, train, eval, synth and end-to-end runs.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 configuration or usage
//! error, 3 data-quality failure, 4 training divergence.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use padpipe_core::classifier::ModelBundle;
use padpipe_core::config::RunConfig;
use padpipe_core::features::{extract_sequences, ExtractionConfig, FeatureTable};
use padpipe_core::ingest::{load_dataset, rebase_entry, CleaningReport, Manifest};
use padpipe_core::layout::FeatureSet;
use padpipe_core::pipeline::{end_to_end, evaluate_model, save_json, save_roc_csv, stage, train_with_cv};
use padpipe_core::segmentation::RidgePolarity;
use padpipe_core::synth::{generate_corpus, generate_preset, write_corpus, Preset};
use padpipe_core::PadError;
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "padpipe", version, about = "Fingerprint presentation-attack detection pipeline")]
struct Cli {
    /// TOML file with run settings; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads (outputs do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the run-config keys.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Blank-frame threshold on the middle-row gray std.
    #[arg(long, global = true, alias = "sigma")]
    sigma_threshold: Option<f64>,
    #[arg(long, global = true)]
    block: Option<usize>,
    #[arg(long, global = true)]
    var_threshold: Option<f64>,
    #[arg(long, global = true)]
    max_lag: Option<usize>,
    #[arg(long, global = true)]
    top_n_signals: Option<usize>,
    #[arg(long, global = true)]
    min_ridge_len: Option<usize>,
    #[arg(long, global = true, value_parser = parse_polarity)]
    polarity: Option<RidgePolarity>,
    #[arg(long, global = true)]
    dry_fraction: Option<f64>,
    #[arg(long, global = true)]
    wet_fraction: Option<f64>,
    #[arg(long, global = true)]
    max_failure_fraction: Option<f64>,
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Comma-separated BPCER operating points.
    #[arg(long, global = true, value_delimiter = ',')]
    bpcer: Option<Vec<f64>>,
    /// Comma-separated hidden layer widths.
    #[arg(long, global = true, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    #[arg(long, global = true)]
    batch_size: Option<usize>,
    #[arg(long, global = true)]
    learning_rate: Option<f64>,
    #[arg(long, global = true)]
    beta1: Option<f64>,
    #[arg(long, global = true)]
    beta2: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    plateau_patience: Option<usize>,
    #[arg(long, global = true)]
    plateau_factor: Option<f64>,
    #[arg(long, global = true)]
    plateau_min_delta: Option<f64>,
    #[arg(long, global = true)]
    validation_fraction: Option<f64>,
    #[arg(long, global = true)]
    synth_live: Option<usize>,
    #[arg(long, global = true)]
    synth_spoof: Option<usize>,
}

fn parse_polarity(s: &str) -> Result<RidgePolarity, String> {
    match s {
        "dark" => Ok(RidgePolarity::Dark),
        "bright" => Ok(RidgePolarity::Bright),
        _ => Err(format!("expected dark|bright, got {s:?}")),
    }
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = &self.$f {
                    c.$f = v.clone();
                }
            )*};
        }
        set!(
            seed,
            sigma_threshold,
            block,
            var_threshold,
            max_lag,
            top_n_signals,
            min_ridge_len,
            polarity,
            dry_fraction,
            wet_fraction,
            max_failure_fraction,
            k,
            bpcer,
            hidden,
            epochs,
            batch_size,
            learning_rate,
            beta1,
            beta2,
            epsilon,
            plateau_patience,
            plateau_factor,
            plateau_min_delta,
            validation_fraction,
            synth_live,
            synth_spoof
        );
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Drop captures without seven consecutive non-blank frames.
    Clean {
        #[arg(long)]
        manifest: PathBuf,
        /// Cleaned manifest to write.
        #[arg(long)]
        out: PathBuf,
        /// Cleaning report (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Extract a feature CSV from a manifest.
    Extract {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "fused")]
        set: FeatureSet,
        #[arg(long)]
        out: PathBuf,
        /// Extraction log (JSON); defaults to `<out>.log.json`.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Directory for mask PNGs and signal CSVs per capture.
        #[arg(long)]
        debug_dir: Option<PathBuf>,
    },
    /// Cross-validate on a feature CSV and train a model on all rows.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "fused")]
        set: FeatureSet,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score a feature CSV with a trained model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        roc: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a synthetic corpus and its manifest.
    Synth {
        #[arg(long)]
        preset: Option<Preset>,
        /// Captures per preset.
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Manifest path; defaults to `<out>/manifest.json`.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Extraction, cross validation of all feature sets and reports.
    Run {
        /// Manifest to use; a synthetic corpus is generated when absent.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        debug_dir: Option<PathBuf>,
    },
    /// Convert a CSV capture listing into a manifest.
    ImportCsv {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the resolved configuration as TOML.
    Config,
}

fn exit_code(e: &PadError) -> u8 {
    match e {
        PadError::Config(_) => 2,
        PadError::TrainingDiverged { .. } => 4,
        PadError::InvalidFrame(_)
        | PadError::InvalidSequence(_)
        | PadError::NoUsableFrames
        | PadError::InsufficientFrames { .. }
        | PadError::EmptyMask(_)
        | PadError::EmptyRidgeSet
        | PadError::SignalTooShort { .. }
        | PadError::AlignmentError { .. }
        | PadError::MetricsUndefined(_)
        | PadError::LayoutMismatch { .. }
        | PadError::InsufficientData(_)
        | PadError::Manifest { .. }
        | PadError::MissingFile { .. }
        | PadError::ModelFormat(_)
        | PadError::FeatureFile(_)
        | PadError::Io(_)
        | PadError::Image(_)
        | PadError::Csv(_)
        | PadError::Json(_) => 3,
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig, PadError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct CleanOutput<'a> {
    run_config_hash: String,
    report: &'a CleaningReport,
    load_failures: &'a [padpipe_core::ingest::EntryFailure],
}

fn parent(p: &Path) -> &Path {
    p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."))
}

fn run(cli: Cli) -> Result<(), PadError> {
    let cfg = resolve_config(&cli)?;
    let hash = cfg.hash();
    info!("run config {hash}");
    match cli.command {
        Command::Config => {
            print!("{}", cfg.to_toml());
        }
        Command::Clean {
            manifest,
            out,
            report,
        } => {
            let ds = load_dataset(&manifest, cfg.sigma_threshold)?;
            let (from, to) = (parent(&manifest), parent(&out));
            std::fs::create_dir_all(to)?;
            let cleaned = Manifest {
                run_config_hash: Some(hash.clone()),
                entries: ds.entries.iter().map(|e| rebase_entry(e, from, to)).collect(),
                ..Manifest::default()
            };
            cleaned.write(&out)?;
            if let Some(r) = report {
                save_json(
                    &CleanOutput {
                        run_config_hash: hash,
                        report: &ds.report,
                        load_failures: &ds.failures,
                    },
                    &r,
                )?;
            }
            eprintln!(
                "kept {} of {} captures ({} removed, {} unreadable)",
                ds.sequences.len(),
                ds.report.total_in + ds.failures.len(),
                ds.report.removed,
                ds.failures.len()
            );
        }
        Command::Extract {
            manifest,
            set,
            out,
            log,
            debug_dir,
        } => {
            let ds = load_dataset(&manifest, cfg.sigma_threshold).map_err(|e| stage("loading", e))?;
            let (table, xlog) = extract_sequences(
                &ds.sequences,
                set,
                &ExtractionConfig::from(&cfg),
                &hash,
                debug_dir.as_deref(),
            );
            let xlog = xlog.with_loading(ds.report, ds.failures);
            table.save(&out)?;
            let log_path = log.unwrap_or_else(|| out.with_extension("log.json"));
            xlog.write(&log_path)?;
            eprintln!(
                "extracted {} of {} captures ({} failed)",
                xlog.extracted, xlog.total, xlog.failed
            );
            xlog.check_failure_rate(cfg.max_failure_fraction)
                .map_err(|e| stage("extraction", e))?;
        }
        Command::Train {
            features,
            set,
            out,
            report,
        } => {
            let table = FeatureTable::load(&features)?;
            let (model, rep) = train_with_cv(&table, set, &cfg)?;
            model.save(&out)?;
            for t in &rep.cross_validation.targets {
                eprintln!(
                    "APCER @ {:.1}% BPCER: {:.2}% (std {:.2}%)",
                    100.0 * t.bpcer,
                    100.0 * t.apcer_mean,
                    100.0 * t.apcer_std
                );
            }
            eprintln!("pooled AUC {:.4}", rep.cross_validation.auc_pooled);
            if let Some(r) = report {
                save_json(&rep, &r)?;
            }
        }
        Command::Eval {
            model,
            features,
            roc,
            report,
        } => {
            let model = ModelBundle::load(&model)?;
            let table = FeatureTable::load(&features)?;
            let ev = evaluate_model(&model, &table, &cfg.bpcer, &hash)?;
            for p in &ev.metrics.at_bpcer {
                eprintln!("APCER @ {:.1}% BPCER: {:.2}%", 100.0 * p.bpcer, 100.0 * p.apcer);
            }
            eprintln!("AUC {:.4}", ev.metrics.auc);
            if let Some(r) = roc {
                save_roc_csv(&ev.metrics.points, ev.set, &hash, &r)?;
            }
            match report {
                Some(r) => save_json(&ev, &r)?,
                None => println!("{}", serde_json::to_string_pretty(&ev)?),
            }
        }
        Command::Synth { preset, n, out, manifest } => {
            let seqs = match preset {
                Some(p) => generate_preset(p, cfg.seed, n)?,
                None => generate_corpus(cfg.seed, n, n)?,
            };
            let mut m = write_corpus(&seqs, &out)?;
            m.run_config_hash = Some(hash);
            let path = manifest.unwrap_or_else(|| out.join("manifest.json"));
            if parent(&path) != out.as_path() {
                let (from, to) = (out.as_path(), parent(&path));
                std::fs::create_dir_all(to)?;
                m.entries = m.entries.iter().map(|e| rebase_entry(e, from, to)).collect();
            }
            m.write(&path)?;
            eprintln!("wrote {} captures to {}", seqs.len(), out.display());
        }
        Command::Run {
            manifest,
            out,
            debug_dir,
        } => {
            let (seqs, loading) = match manifest {
                Some(m) => {
                    let ds = load_dataset(&m, cfg.sigma_threshold).map_err(|e| stage("loading", e))?;
                    (ds.sequences, Some((ds.report, ds.failures)))
                }
                None => (generate_corpus(cfg.seed, cfg.synth_live, cfg.synth_spoof)?, None),
            };
            let rep = end_to_end(&cfg, &seqs, loading, &out, debug_dir.as_deref())?;
            for s in &rep.sets {
                let at = |b: f64| s.cross_validation.target(b).map(|t| 100.0 * t.apcer_mean);
                eprintln!(
                    "{:>7}: pooled AUC {:.4}, APCER @ 1% BPCER {}",
                    s.set.to_string(),
                    s.auc_pooled,
                    at(0.01).map_or("n/a".into(), |v| format!("{v:.2}%"))
                );
            }
        }
        Command::ImportCsv { csv, out } => {
            let file = std::fs::File::open(&csv)?;
            let m = Manifest::from_csv_reader(file)?;
            m.write(&out)?;
            eprintln!("wrote {} entries", m.entries.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(1),
    }
}
