use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::network::{Network, NetworkSpec, HIDDEN};
use super::optim::{Adam, PlateauScheduler};
use crate::error::{PadError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
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
    /// Share of each training set held out to monitor the plateau.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden: HIDDEN.to_vec(),
            epochs: 50,
            batch_size: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            plateau_patience: 10,
            plateau_factor: 0.1,
            plateau_min_delta: 1e-6,
            validation_fraction: 0.1,
            seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PadError::Config(m.to_string()));
        if self.epochs < 1 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size < 1 {
            return bad("batch_size must be at least 1");
        }
        if !(self.plateau_factor > 0.0 && self.plateau_factor < 1.0) {
            return bad("plateau_factor must lie in (0, 1)");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return bad("invalid Adam parameters");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }

    pub fn network_spec(&self, input: usize) -> NetworkSpec {
        NetworkSpec::new(input, &self.hidden)
    }
}

/// Per-epoch training history.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainTrace {
    pub train_loss: Vec<f64>,
    /// Loss monitored by the plateau schedule (validation loss when a
    /// validation set exists, training loss otherwise).
    pub monitor_loss: Vec<f64>,
    /// Learning rate used during each epoch.
    pub learning_rate: Vec<f64>,
}

/// Trains a freshly initialized network on normalized inputs. Labels are
/// class indices (live 0, spoof 1).
pub fn train(
    spec: &NetworkSpec,
    cfg: &TrainConfig,
    x: &Matrix,
    y: &[usize],
    val: Option<(&Matrix, &[usize])>,
) -> Result<(Network, TrainTrace)> {
    cfg.validate()?;
    spec.validate()?;
    if x.rows == 0 || x.rows != y.len() {
        return Err(PadError::InsufficientData(format!(
            "{} rows with {} labels",
            x.rows,
            y.len()
        )));
    }
    if let Some(&bad) = y.iter().find(|&&c| c > 1) {
        return Err(PadError::InsufficientData(format!("label {bad} out of range")));
    }
    let val = val.filter(|(vx, _)| vx.rows > 0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::xavier_uniform(spec.clone(), &mut rng);
    let mut adam = Adam::new(&net, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
    let mut plateau = PlateauScheduler::new(cfg.plateau_patience, cfg.plateau_factor, cfg.plateau_min_delta);
    let mut order: Vec<usize> = (0..x.rows).collect();
    let mut trace = TrainTrace::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (batch, idx) in order.chunks(cfg.batch_size).enumerate() {
            let bx = x.select_rows(idx);
            let by: Vec<usize> = idx.iter().map(|&i| y[i]).collect();
            let (loss, grads) = net.loss_and_gradient(&bx, &by)?;
            if !loss.is_finite() {
                return Err(PadError::TrainingDiverged {
                    epoch,
                    batch,
                    detail: format!("loss {loss} on rows {:?}", &idx[..idx.len().min(8)]),
                });
            }
            total += loss * idx.len() as f64;
            adam.step(&mut net, &grads);
        }
        let train_loss = total / x.rows as f64;
        let monitor = match val {
            Some((vx, vy)) => net.loss(vx, vy)?,
            None => train_loss,
        };
        if !monitor.is_finite() {
            return Err(PadError::TrainingDiverged {
                epoch,
                batch: 0,
                detail: format!("monitored loss {monitor}"),
            });
        }
        trace.train_loss.push(train_loss);
        trace.monitor_loss.push(monitor);
        trace.learning_rate.push(adam.lr);
        adam.lr = plateau.step(monitor, adam.lr);
    }
    Ok((net, trace))
}

/// Spoof-class probabilities.
pub fn spoof_scores(net: &Network, x: &Matrix) -> Result<Vec<f64>> {
    let p = net.probabilities(x)?;
    Ok((0..p.rows).map(|i| p.get(i, 1)).collect())
}
