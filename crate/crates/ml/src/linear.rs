//! Multi-output linear regression fitted by mini-batch SGD on the mean
//! squared error.

use crate::{invalid, MlError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LrConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 200,
            batch_size: 32,
            seed: 0,
        }
    }
}

/// `y_t = Σ_i weights[t][i] x_i + bias[t]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(n_in: usize, n_out: usize) -> LinearModel {
        LinearModel {
            weights: vec![vec![0.0; n_in]; n_out],
            bias: vec![0.0; n_out],
        }
    }

    pub fn predict_one(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }

    /// Mean over rows and outputs of the squared error.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> f64 {
        let n_out = self.bias.len();
        let s: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                self.predict_one(x)
                    .iter()
                    .zip(y)
                    .map(|(p, t)| (p - t).powi(2))
                    .sum::<f64>()
            })
            .sum();
        s / (xs.len() * n_out) as f64
    }
}

/// Returns the model and the loss history (one value per epoch, evaluated
/// on the full set after the epoch).
pub fn train_lr_sgd(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    cfg: &LrConfig,
) -> Result<(LinearModel, Vec<f64>)> {
    if xs.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) {
        return Err(invalid("batch_size and learning_rate must be positive"));
    }
    let (n_in, n_out) = (xs[0].len(), ys[0].len());
    let mut m = LinearModel::zeros(n_in, n_out);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut gw = vec![vec![0.0; n_in]; n_out];
    let mut gb = vec![0.0; n_out];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(cfg.batch_size) {
            gw.iter_mut().for_each(|r| r.fill(0.0));
            gb.fill(0.0);
            let scale = 2.0 / (batch.len() * n_out) as f64;
            for &r in batch {
                let p = m.predict_one(&xs[r]);
                for t in 0..n_out {
                    let e = scale * (p[t] - ys[r][t]);
                    gb[t] += e;
                    for i in 0..n_in {
                        gw[t][i] += e * xs[r][i];
                    }
                }
            }
            for t in 0..n_out {
                m.bias[t] -= cfg.learning_rate * gb[t];
                for i in 0..n_in {
                    m.weights[t][i] -= cfg.learning_rate * gw[t][i];
                }
            }
        }
        let loss = m.loss(xs, ys);
        if !loss.is_finite() {
            return Err(MlError::Diverged { epoch });
        }
        history.push(loss);
    }
    Ok((m, history))
}
