use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{gemm, Matrix};
use crate::error::{PadError, Result};

pub const HIDDEN: [usize; 2] = [400, 400];
pub const CLASSES: usize = 2;

/// Fully connected network: relu on every hidden layer, softmax output,
/// Xavier-uniform weights, zero biases, cross-entropy loss.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Layer widths from input to output.
    pub sizes: Vec<usize>,
}

impl NetworkSpec {
    /// `[input, 400, 400, 2]`.
    pub fn dnn1(input: usize) -> Self {
        Self::new(input, &HIDDEN)
    }

    pub fn new(input: usize, hidden: &[usize]) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(CLASSES);
        Self { sizes }
    }

    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 2 || self.sizes.contains(&0) {
            return Err(PadError::Config(format!("invalid layer sizes {:?}", self.sizes)));
        }
        if *self.sizes.last().unwrap() != CLASSES {
            return Err(PadError::Config("output layer must have 2 units".into()));
        }
        Ok(())
    }

    pub fn activations(&self) -> Vec<&'static str> {
        let mut a = vec!["relu"; self.sizes.len() - 2];
        a.push("softmax");
        a
    }
}

/// Weights (`inputs x outputs`) and biases of one dense layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub w: Matrix,
    pub b: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            w: Matrix::zeros(inputs, outputs),
            b: vec![0.0; outputs],
        }
    }

    /// Weights then biases.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.w.data.iter().chain(&self.b)
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w.data.iter_mut().chain(self.b.iter_mut())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    pub layers: Vec<Layer>,
}

fn softmax_rows(z: &mut Matrix) {
    for i in 0..z.rows {
        let row = z.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

/// Mean of `-ln softmax(z)[y]` over rows.
fn cross_entropy(logits: &Matrix, y: &[usize]) -> f64 {
    let mut total = 0.0;
    for (i, &label) in y.iter().enumerate() {
        let row = logits.row(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        total += lse - row[label];
    }
    total / y.len() as f64
}

impl Network {
    pub fn zeros(spec: NetworkSpec) -> Self {
        let layers = spec.sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect();
        Self { spec, layers }
    }

    pub fn xavier_uniform(spec: NetworkSpec, rng: &mut impl Rng) -> Self {
        let mut net = Self::zeros(spec);
        for layer in &mut net.layers {
            let limit = (6.0 / (layer.w.rows + layer.w.cols) as f64).sqrt();
            layer.w.data.iter_mut().for_each(|v| *v = rng.gen_range(-limit..limit));
        }
        net
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.data.len() + l.b.len()).sum()
    }

    /// Outputs of every layer: post-relu for hidden layers, logits last.
    fn forward(&self, x: &Matrix) -> Vec<Matrix> {
        let mut outs: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let input = if l == 0 { x } else { &outs[l - 1] };
            let mut z = Matrix::zeros(input.rows, layer.w.cols);
            for i in 0..z.rows {
                z.row_mut(i).copy_from_slice(&layer.b);
            }
            gemm(input, false, &layer.w, false, 1.0, &mut z);
            if l + 1 < self.layers.len() {
                // NaN passes through so divergence is detected.
                z.data.iter_mut().for_each(|v| {
                    if *v < 0.0 {
                        *v = 0.0
                    }
                });
            }
            outs.push(z);
        }
        outs
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols != self.spec.input_len() {
            return Err(PadError::LayoutMismatch {
                expected: format!("{} inputs", self.spec.input_len()),
                found: format!("{} inputs", x.cols),
            });
        }
        Ok(())
    }

    /// Class probabilities, one row per input row.
    pub fn probabilities(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut p = self.forward(x).pop().expect("at least one layer");
        softmax_rows(&mut p);
        Ok(p)
    }

    /// Mean cross-entropy loss.
    pub fn loss(&self, x: &Matrix, y: &[usize]) -> Result<f64> {
        self.check_input(x)?;
        Ok(cross_entropy(self.forward(x).last().expect("layer"), y))
    }

    /// Mean cross-entropy loss and its gradient with respect to every
    /// parameter, shaped like `self.layers`.
    pub fn loss_and_gradient(&self, x: &Matrix, y: &[usize]) -> Result<(f64, Vec<Layer>)> {
        self.check_input(x)?;
        let outs = self.forward(x);
        let logits = outs.last().expect("layer");
        let loss = cross_entropy(logits, y);
        let n = y.len() as f64;
        let mut delta = logits.clone();
        softmax_rows(&mut delta);
        for (i, &label) in y.iter().enumerate() {
            let row = delta.row_mut(i);
            row[label] -= 1.0;
            row.iter_mut().for_each(|v| *v /= n);
        }
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for l in (0..self.layers.len()).rev() {
            let input = if l == 0 { x } else { &outs[l - 1] };
            let layer = &self.layers[l];
            let mut g = Layer::zeros(layer.w.rows, layer.w.cols);
            gemm(input, true, &delta, false, 0.0, &mut g.w);
            for i in 0..delta.rows {
                for (b, d) in g.b.iter_mut().zip(delta.row(i)) {
                    *b += d;
                }
            }
            if l > 0 {
                let mut prev = Matrix::zeros(delta.rows, layer.w.rows);
                gemm(&delta, false, &layer.w, true, 0.0, &mut prev);
                for (p, a) in prev.data.iter_mut().zip(&input.data) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
            grads.push(g);
        }
        grads.reverse();
        Ok((loss, grads))
    }
}
