use super::network::{Layer, Network};

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &Network, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let sizes: Vec<usize> = net.layers.iter().map(|l| l.params().count()).collect();
        Self {
            lr,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn step(&mut self, net: &mut Network, grads: &[Layer]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((layer, g), m), v) in net
            .layers
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for (((p, &g), m), v) in layer.params_mut().zip(g.params()).zip(m).zip(v) {
                *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

/// Multiplies the learning rate by `factor` once the monitored loss has
/// failed to drop by more than `min_delta` below its best value for
/// `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    pub patience: usize,
    pub factor: f64,
    pub min_delta: f64,
    best: f64,
    wait: usize,
}

impl PlateauScheduler {
    pub fn new(patience: usize, factor: f64, min_delta: f64) -> Self {
        Self {
            patience,
            factor,
            min_delta,
            best: f64::INFINITY,
            wait: 0,
        }
    }

    /// Records one epoch's loss and returns the learning rate for the next
    /// epoch.
    pub fn step(&mut self, loss: f64, lr: f64) -> f64 {
        if loss < self.best - self.min_delta {
            self.best = loss;
            self.wait = 0;
            return lr;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            self.wait = 0;
            lr * self.factor
        } else {
            lr
        }
    }
}
