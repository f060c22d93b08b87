//! Trained model bundle and its single-file format:
//!
//! ```text
//! b"PADMODEL" | u32 LE version | u32 LE header length | JSON header
//! | f64 LE: normalizer means, normalizer stds, then per layer weights
//! (row-major, inputs x outputs) followed by biases
//! ```

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::network::{Layer, Network, NetworkSpec};
use super::normalize::{fit_normalizer, NormalizationStats};
use super::train::{spoof_scores, train, TrainConfig, TrainTrace};
use crate::capture::Class;
use crate::error::{PadError, Result};
use crate::layout::FeatureSet;

pub const MAGIC: &[u8; 8] = b"PADMODEL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub set: FeatureSet,
    pub layout_hash: String,
    pub network: NetworkSpec,
    pub activations: Vec<String>,
    pub train_config: TrainConfig,
    pub run_config_hash: String,
    pub floored_features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub header: ModelHeader,
    pub normalizer: NormalizationStats,
    pub network: Network,
}

impl ModelBundle {
    /// Normalizes on all rows, holds out the configured validation share
    /// and trains.
    pub fn fit(
        set: FeatureSet,
        layout_hash: &str,
        x: &Matrix,
        labels: &[Class],
        cfg: &TrainConfig,
        run_config_hash: &str,
    ) -> Result<(Self, TrainTrace)> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
        let all: Vec<usize> = (0..x.rows).collect();
        let (fit, val) = super::cv::validation_split(&all, labels, cfg.validation_fraction, &mut rng);
        let normalizer = fit_normalizer(&x.select_rows(&fit))?;
        let y: Vec<usize> = labels.iter().map(|c| c.index()).collect();
        let pick = |idx: &[usize]| idx.iter().map(|&i| y[i]).collect::<Vec<_>>();
        let spec = cfg.network_spec(x.cols);
        let (network, trace) = train(
            &spec,
            cfg,
            &normalizer.apply(&x.select_rows(&fit))?,
            &pick(&fit),
            Some((&normalizer.apply(&x.select_rows(&val))?, &pick(&val))),
        )?;
        let header = ModelHeader {
            set,
            layout_hash: layout_hash.to_string(),
            activations: spec.activations().iter().map(|s| s.to_string()).collect(),
            network: spec,
            train_config: cfg.clone(),
            run_config_hash: run_config_hash.to_string(),
            floored_features: normalizer.floored.clone(),
        };
        Ok((
            Self {
                header,
                normalizer,
                network,
            },
            trace,
        ))
    }

    /// Spoof scores for raw (unnormalized) rows laid out as `layout_hash`.
    pub fn predict(&self, x: &Matrix, layout_hash: &str) -> Result<Vec<f64>> {
        if layout_hash != self.header.layout_hash {
            return Err(PadError::LayoutMismatch {
                expected: self.header.layout_hash.clone(),
                found: layout_hash.to_string(),
            });
        }
        spoof_scores(&self.network, &self.normalizer.apply(x)?)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let header = serde_json::to_vec(&self.header)?;
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        let values = self
            .normalizer
            .mean
            .iter()
            .chain(&self.normalizer.std)
            .chain(self.network.layers.iter().flat_map(Layer::params));
        for v in values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let bad = |m: String| PadError::ModelFormat(m);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated magic".into()))?;
        if &magic != MAGIC {
            return Err(bad("not a model file".into()));
        }
        let mut word = [0u8; 4];
        r.read_exact(&mut word).map_err(|_| bad("truncated version".into()))?;
        let version = u32::from_le_bytes(word);
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        r.read_exact(&mut word).map_err(|_| bad("truncated header length".into()))?;
        let mut header = vec![0u8; u32::from_le_bytes(word) as usize];
        r.read_exact(&mut header).map_err(|_| bad("truncated header".into()))?;
        let header: ModelHeader =
            serde_json::from_slice(&header).map_err(|e| bad(format!("header: {e}")))?;
        header.network.validate()?;
        let d = header.network.input_len();
        let mut read_vec = |n: usize| -> Result<Vec<f64>> {
            let mut buf = vec![0u8; 8 * n];
            r.read_exact(&mut buf).map_err(|_| bad("truncated parameters".into()))?;
            Ok(buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect())
        };
        let mean = read_vec(d)?;
        let std = read_vec(d)?;
        let mut network = Network::zeros(header.network.clone());
        for layer in &mut network.layers {
            let n = layer.params().count();
            for (p, v) in layer.params_mut().zip(read_vec(n)?) {
                *p = v;
            }
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(bad(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self {
            normalizer: NormalizationStats {
                mean,
                std,
                floored: header.floored_features.clone(),
            },
            header,
            network,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> (Matrix, Vec<Class>) {
        let labels: Vec<Class> = (0..30).map(|i| if i % 2 == 0 { Class::Live } else { Class::Spoof }).collect();
        let x = Matrix::from_vec(
            30,
            2,
            (0..30).flat_map(|i| [i as f64 % 2.0 + 0.01 * i as f64, 1.0 - 0.02 * i as f64]).collect(),
        )
        .unwrap();
        (x, labels)
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            hidden: vec![4, 3],
            epochs: 3,
            batch_size: 8,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn roundtrip_is_exact() {
        let (x, labels) = tiny();
        let (m, _) = ModelBundle::fit(FeatureSet::Static, "abc", &x, &labels, &cfg(), "h").unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let back = ModelBundle::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.predict(&x, "abc").unwrap(), m.predict(&x, "abc").unwrap());
    }

    #[test]
    fn layout_mismatch_is_hard_error() {
        let (x, labels) = tiny();
        let (m, _) = ModelBundle::fit(FeatureSet::Static, "abc", &x, &labels, &cfg(), "h").unwrap();
        assert!(matches!(m.predict(&x, "abd"), Err(PadError::LayoutMismatch { .. })));
    }

    #[test]
    fn corrupt_files_rejected() {
        let (x, labels) = tiny();
        let (m, _) = ModelBundle::fit(FeatureSet::Fused, "abc", &x, &labels, &cfg(), "h").unwrap();
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(ModelBundle::read_from(&mut &truncated[..]), Err(PadError::ModelFormat(_))));
        let mut wrong = buf.clone();
        wrong[0] = b'X';
        assert!(matches!(ModelBundle::read_from(&mut wrong.as_slice()), Err(PadError::ModelFormat(_))));
    }
}
