//! Run configuration: every tunable of the pipeline in one flat document.
//!
//! Keys mirror the command-line flag names (with `_` for `-`). Values come
//! from defaults, then an optional TOML file, then flags. The resolved
//! configuration is hashed and the hash is embedded in every output.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{TrainConfig, DEFAULT_BPCER_TARGETS};
use crate::dynamic::PerspirationConfig;
use crate::error::{PadError, Result};
use crate::ingest::DEFAULT_SIGMA_THRESHOLD;
use crate::layout::hex_prefix;
use crate::segmentation::{RidgePolarity, SegmentationConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,

    pub sigma_threshold: f64,
    pub block: usize,
    pub var_threshold: f64,
    pub max_lag: usize,
    pub top_n_signals: usize,
    pub min_ridge_len: usize,
    pub polarity: RidgePolarity,
    pub dry_fraction: f64,
    pub wet_fraction: f64,
    /// Largest tolerated share of captures failing extraction.
    pub max_failure_fraction: f64,

    pub k: usize,
    pub bpcer: Vec<f64>,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub plateau_patience: usize,
    pub plateau_factor: f64,
    pub plateau_min_delta: f64,
    pub validation_fraction: f64,

    /// Corpus size of `padpipe run` without a manifest.
    pub synth_live: usize,
    pub synth_spoof: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let seg = SegmentationConfig::default();
        let persp = PerspirationConfig::default();
        let train = TrainConfig::default();
        Self {
            seed: train.seed,
            sigma_threshold: DEFAULT_SIGMA_THRESHOLD,
            block: seg.block,
            var_threshold: seg.var_threshold,
            max_lag: seg.max_lag,
            top_n_signals: seg.top_n_signals,
            min_ridge_len: seg.min_ridge_len,
            polarity: seg.polarity,
            dry_fraction: persp.dry_fraction,
            wet_fraction: persp.wet_fraction,
            max_failure_fraction: 0.10,
            k: 10,
            bpcer: DEFAULT_BPCER_TARGETS.to_vec(),
            hidden: train.hidden,
            epochs: train.epochs,
            batch_size: train.batch_size,
            learning_rate: train.learning_rate,
            beta1: train.beta1,
            beta2: train.beta2,
            epsilon: train.epsilon,
            plateau_patience: train.plateau_patience,
            plateau_factor: train.plateau_factor,
            plateau_min_delta: train.plateau_min_delta,
            validation_fraction: train.validation_fraction,
            synth_live: 200,
            synth_spoof: 200,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| PadError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PadError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| PadError::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }

    pub fn segmentation(&self) -> SegmentationConfig {
        SegmentationConfig {
            block: self.block,
            var_threshold: self.var_threshold,
            max_lag: self.max_lag,
            top_n_signals: self.top_n_signals,
            min_ridge_len: self.min_ridge_len,
            polarity: self.polarity,
        }
    }

    pub fn perspiration(&self) -> PerspirationConfig {
        PerspirationConfig {
            dry_fraction: self.dry_fraction,
            wet_fraction: self.wet_fraction,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            hidden: self.hidden.clone(),
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
            plateau_patience: self.plateau_patience,
            plateau_factor: self.plateau_factor,
            plateau_min_delta: self.plateau_min_delta,
            validation_fraction: self.validation_fraction,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PadError::Config(m.to_string()));
        if !(self.sigma_threshold >= 0.0) {
            return bad("sigma_threshold must be >= 0");
        }
        if self.block == 0 || self.top_n_signals == 0 || self.min_ridge_len < 2 {
            return bad("block and top_n_signals must be positive, min_ridge_len >= 2");
        }
        if !(self.var_threshold >= 0.0) {
            return bad("var_threshold must be >= 0");
        }
        if !(0.0 <= self.dry_fraction && self.dry_fraction < self.wet_fraction && self.wet_fraction <= 1.0) {
            return bad("need 0 <= dry_fraction < wet_fraction <= 1");
        }
        if !(0.0..=1.0).contains(&self.max_failure_fraction) {
            return bad("max_failure_fraction must lie in [0, 1]");
        }
        if self.k < 2 {
            return bad("k must be at least 2");
        }
        if self.bpcer.is_empty() || self.bpcer.iter().any(|b| !(0.0..=1.0).contains(b)) {
            return bad("bpcer targets must lie in [0, 1]");
        }
        self.train().validate()
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("plain data serializes");
        hex_prefix(&Sha256::digest(json.as_bytes()), 8)
    }
}
