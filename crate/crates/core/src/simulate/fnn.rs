//! A small fully connected network trained by full-batch gradient descent.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::reference::ClassId;
use crate::{Error, Result};

/// Slope of the hidden activation for negative inputs.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Feedforward network with leaky-ReLU hidden layers and a single logistic
/// output.
///
/// Layer `l` (1-based) maps activations of width `layer_sizes[l-1]` to
/// width `layer_sizes[l]`. The embedding is the pre-activation of layer
/// `embedding_layer`.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyFnn {
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    pub embedding_layer: usize,
}

/// Pre-activations and activations of every layer for one input.
struct Trace {
    pre: Vec<DVector<f64>>,
    post: Vec<DVector<f64>>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy from the logit, stable for large |z|.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl TinyFnn {
    fn check_arch(layer_sizes: &[usize], embedding_layer: usize) -> Result<()> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(Error::InvalidParameter(format!("invalid layer sizes {layer_sizes:?}")));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return Err(Error::InvalidParameter("the output layer must have width 1".into()));
        }
        if embedding_layer == 0 || embedding_layer >= layer_sizes.len() {
            return Err(Error::InvalidParameter(format!(
                "embedding layer must be in 1..{}, got {embedding_layer}",
                layer_sizes.len()
            )));
        }
        Ok(())
    }

    /// All weights and biases zero.
    pub fn zeros(layer_sizes: &[usize], embedding_layer: usize) -> Result<Self> {
        Self::check_arch(layer_sizes, embedding_layer)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes.windows(2).map(|w| DMatrix::zeros(w[1], w[0])).collect(),
            biases: layer_sizes[1..].iter().map(|&n| DVector::zeros(n)).collect(),
            embedding_layer,
        })
    }

    /// Glorot-uniform weights and zero biases.
    pub fn random(layer_sizes: &[usize], embedding_layer: usize, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, embedding_layer)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for w in &mut net.weights {
            let limit = (6.0 / (w.nrows() + w.ncols()) as f64).sqrt();
            w.iter_mut().for_each(|x| *x = rng.random_range(-limit..limit));
        }
        Ok(net)
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn embedding_dim(&self) -> usize {
        self.layer_sizes[self.embedding_layer]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let last = self.weights.len() - 1;
        let mut post = vec![DVector::from_column_slice(x)];
        let mut pre = Vec::with_capacity(self.weights.len());
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = w * post.last().unwrap() + b;
            let a = if l == last {
                z.map(sigmoid)
            } else {
                z.map(|v| if v > 0.0 { v } else { LEAKY_SLOPE * v })
            };
            pre.push(z);
            post.push(a);
        }
        Trace { pre, post }
    }

    /// Pre-activation of the embedding layer.
    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).pre[self.embedding_layer - 1].as_slice().to_vec())
    }

    /// Logistic output, read as the score of class 1.
    pub fn output(&self, x: &[f64]) -> Result<f64> {
        self.check_input(x)?;
        Ok(self.trace(x).post.last().unwrap()[0])
    }

    /// Class 1 iff the output is at least 0.5, with the output itself.
    pub fn predict(&self, x: &[f64]) -> Result<(ClassId, f64)> {
        let p = self.output(x)?;
        Ok((ClassId(u32::from(p >= 0.5)), p))
    }

    /// Mean binary cross-entropy over `(x, y)` with `y ∈ {0, 1}`.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| bce_from_logit(self.trace(x).pre.last().unwrap()[0], y))
            .sum();
        total / xs.len() as f64
    }

    /// Mean loss and its gradients with respect to weights and biases.
    pub fn gradient(&self, xs: &[Vec<f64>], ys: &[f64]) -> (f64, Vec<DMatrix<f64>>, Vec<DVector<f64>>) {
        let n = xs.len() as f64;
        let mut gw: Vec<DMatrix<f64>> = self
            .weights
            .iter()
            .map(|w| DMatrix::zeros(w.nrows(), w.ncols()))
            .collect();
        let mut gb: Vec<DVector<f64>> = self.biases.iter().map(|b| DVector::zeros(b.len())).collect();
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let t = self.trace(x);
            let logit = t.pre.last().unwrap()[0];
            loss += bce_from_logit(logit, y);
            // d loss / d logit for a logistic output with cross-entropy
            let mut delta = DVector::from_element(1, sigmoid(logit) - y);
            for l in (0..self.weights.len()).rev() {
                gw[l] += &delta * t.post[l].transpose();
                gb[l] += &delta;
                if l > 0 {
                    let back = self.weights[l].transpose() * &delta;
                    delta = back.zip_map(&t.pre[l - 1], |g, z| if z > 0.0 { g } else { LEAKY_SLOPE * g });
                }
            }
        }
        gw.iter_mut().for_each(|g| *g /= n);
        gb.iter_mut().for_each(|g| *g /= n);
        (loss / n, gw, gb)
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        let correct = xs
            .iter()
            .zip(ys)
            .filter(|(x, &y)| {
                let p = self.trace(x).post.last().unwrap()[0];
                (p >= 0.5) == (y >= 0.5)
            })
            .count();
        correct as f64 / xs.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            max_epochs: 2000,
            seed: 0,
        }
    }
}

/// Full-batch gradient descent on binary cross-entropy, stopping as soon as
/// every training point is classified correctly.
pub fn train_fnn(
    xs: &[Vec<f64>],
    ys: &[f64],
    layer_sizes: &[usize],
    embedding_layer: usize,
    config: &TrainConfig,
) -> Result<TinyFnn> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::InvalidParameter(
            "training needs one label per input and at least one input".into(),
        ));
    }
    if ys.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidParameter("training labels must be 0 or 1".into()));
    }
    let mut net = TinyFnn::random(layer_sizes, embedding_layer, config.seed)?;
    for x in xs {
        net.check_input(x)?;
    }
    let mut accuracy = net.accuracy(xs, ys);
    for _ in 0..config.max_epochs {
        if accuracy == 1.0 {
            return Ok(net);
        }
        let (_, gw, gb) = net.gradient(xs, ys);
        for (w, g) in net.weights.iter_mut().zip(&gw) {
            *w -= g * config.learning_rate;
        }
        for (b, g) in net.biases.iter_mut().zip(&gb) {
            *b -= g * config.learning_rate;
        }
        accuracy = net.accuracy(xs, ys);
    }
    if accuracy == 1.0 {
        Ok(net)
    } else {
        Err(Error::TrainingFailed {
            epochs: config.max_epochs,
            accuracy,
        })
    }
}
