//! Fully connected feed-forward regressor: configurable hidden activation,
//! identity output layer, loss `MSE + alpha ‖W‖² / n` over a batch of `n`
//! rows, trained by backpropagation with SGD, Adam or AdaDelta.

use crate::{invalid, MlError, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
        }
    }

    /// Derivative expressed through the activation output `a`.
    #[inline]
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Sigmoid => a * (1.0 - a),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = MlError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" | "logistic" => Ok(Activation::Sigmoid),
            _ => Err(invalid(format!("unknown activation '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Sgd,
    Adam,
    Adadelta,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Sgd => "sgd",
            Solver::Adam => "adam",
            Solver::Adadelta => "adadelta",
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = MlError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(Solver::Sgd),
            "adam" => Ok(Solver::Adam),
            "adadelta" => Ok(Solver::Adadelta),
            _ => Err(invalid(format!("unknown solver '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub activation: Activation,
    pub solver: Solver,
    /// L2 coefficient
    pub alpha: f64,
    /// early-stopping tolerance on the epoch loss
    pub tol: f64,
    pub max_iter: usize,
    pub batch_size: usize,
    /// step size for SGD and Adam; AdaDelta takes unit steps
    pub learning_rate: f64,
    /// epochs without a `tol` improvement before stopping
    pub n_iter_no_change: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_layers: vec![100],
            activation: Activation::Relu,
            solver: Solver::Adam,
            alpha: 1e-4,
            tol: 1e-4,
            max_iter: 2000,
            batch_size: 32,
            learning_rate: 1e-3,
            n_iter_no_change: 10,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return Err(invalid("every hidden layer needs at least one neuron"));
        }
        if !(self.alpha >= 0.0) || !(self.tol > 0.0) {
            return Err(invalid("alpha must be >= 0 and tol > 0"));
        }
        if self.batch_size == 0 || self.n_iter_no_change == 0 {
            return Err(invalid("batch_size and n_iter_no_change must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(invalid("learning_rate must be positive"));
        }
        Ok(())
    }

    /// Hidden layer sizes joined with dashes, e.g. `10-15-20-15`.
    pub fn architecture(&self) -> String {
        architecture_string(&self.hidden_layers)
    }
}

pub fn architecture_string(layers: &[usize]) -> String {
    layers
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("-")
}

/// `out = W in + b`, `W` row-major `n_out × n_in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub activation: Activation,
    pub layers: Vec<Layer>,
}

impl Network {
    /// All-zero network with layer widths `sizes` (inputs first, outputs last).
    pub fn zeros(sizes: &[usize], activation: Activation) -> Network {
        let layers = sizes
            .windows(2)
            .map(|w| Layer {
                n_in: w[0],
                n_out: w[1],
                w: vec![0.0; w[0] * w[1]],
                b: vec![0.0; w[1]],
            })
            .collect();
        Network { activation, layers }
    }

    /// Uniform Glorot initialisation, widened by √2 for ReLU.
    pub fn init(sizes: &[usize], activation: Activation, rng: &mut impl Rng) -> Network {
        let mut net = Network::zeros(sizes, activation);
        for l in &mut net.layers {
            let mut bound = (6.0 / (l.n_in + l.n_out) as f64).sqrt();
            if activation == Activation::Relu {
                bound *= std::f64::consts::SQRT_2;
            }
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = rng.gen_range(-bound..bound);
            }
        }
        net
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_outputs(&self) -> usize {
        self.layers[self.layers.len() - 1].n_out
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Flat parameters: per layer the weights then the biases.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            p.extend_from_slice(&l.w);
            p.extend_from_slice(&l.b);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let mut o = 0;
        for l in &mut self.layers {
            let (nw, nb) = (l.w.len(), l.b.len());
            l.w.copy_from_slice(&p[o..o + nw]);
            l.b.copy_from_slice(&p[o + nw..o + nw + nb]);
            o += nw + nb;
        }
    }

    fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().flat_map(|l| &l.w).map(|w| w * w).sum()
    }

    /// Fills `acts[0] = x` and `acts[l + 1]` with each layer's output.
    fn forward(&self, x: &[f64], acts: &mut [Vec<f64>]) {
        acts[0].clear();
        acts[0].extend_from_slice(x);
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let (prev, rest) = acts.split_at_mut(k + 1);
            let input = &prev[k];
            let out = &mut rest[0];
            out.clear();
            for o in 0..l.n_out {
                let row = &l.w[o * l.n_in..(o + 1) * l.n_in];
                let z = l.b[o] + row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
                out.push(if k == last {
                    z
                } else {
                    self.activation.apply(z)
                });
            }
        }
    }

    fn buffers(&self) -> Vec<Vec<f64>> {
        std::iter::once(self.n_inputs())
            .chain(self.layers.iter().map(|l| l.n_out))
            .map(Vec::with_capacity)
            .collect()
    }

    pub fn predict_one(&self, x: &[f64]) -> Vec<f64> {
        let mut acts = self.buffers();
        self.forward(x, &mut acts);
        acts.pop().unwrap_or_default()
    }

    /// `(1/(n·m)) Σ (f(x) − y)² + alpha ‖W‖² / n` over `n` rows, `m` outputs.
    pub fn loss(&self, xs: &[Vec<f64>], ys: &[Vec<f64>], alpha: f64) -> f64 {
        let mut acts = self.buffers();
        let m = self.n_outputs();
        let mut s = 0.0;
        for (x, y) in xs.iter().zip(ys) {
            self.forward(x, &mut acts);
            s += acts[acts.len() - 1]
                .iter()
                .zip(y)
                .map(|(p, t)| (p - t).powi(2))
                .sum::<f64>();
        }
        let n = xs.len() as f64;
        s / (n * m as f64) + alpha * self.weight_norm_sq() / n
    }
}

/// Loss and its exact gradient (flat, [`Network::params`] order) over a batch.
pub fn backprop_gradient(
    net: &Network,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    alpha: f64,
) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; net.n_params()];
    let loss = accumulate_gradient(net, xs, ys, alpha, &mut grad, &mut Scratch::new(net));
    (loss, grad)
}

struct Scratch {
    acts: Vec<Vec<f64>>,
    delta: Vec<f64>,
    next: Vec<f64>,
    /// offset of each layer's block in the flat parameter vector
    offsets: Vec<usize>,
}

impl Scratch {
    fn new(net: &Network) -> Scratch {
        let mut offsets = Vec::with_capacity(net.layers.len());
        let mut o = 0;
        for l in &net.layers {
            offsets.push(o);
            o += l.w.len() + l.b.len();
        }
        Scratch {
            acts: net.buffers(),
            delta: Vec::new(),
            next: Vec::new(),
            offsets,
        }
    }
}

fn accumulate_gradient(
    net: &Network,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    alpha: f64,
    grad: &mut [f64],
    s: &mut Scratch,
) -> f64 {
    grad.fill(0.0);
    let n = xs.len() as f64;
    let m = net.n_outputs();
    let scale = 2.0 / (n * m as f64);
    let nl = net.layers.len();
    let mut sq = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        net.forward(x, &mut s.acts);
        s.delta.clear();
        for (p, t) in s.acts[nl].iter().zip(y) {
            sq += (p - t).powi(2);
            s.delta.push(scale * (p - t));
        }
        for k in (0..nl).rev() {
            let l = &net.layers[k];
            let input = &s.acts[k];
            let o = s.offsets[k];
            let (gw, gb) = grad[o..o + l.w.len() + l.b.len()].split_at_mut(l.w.len());
            for (r, &d) in s.delta.iter().enumerate() {
                gb[r] += d;
                if d != 0.0 {
                    let row = &mut gw[r * l.n_in..(r + 1) * l.n_in];
                    for (g, a) in row.iter_mut().zip(input) {
                        *g += d * a;
                    }
                }
            }
            if k > 0 {
                s.next.clear();
                s.next.resize(l.n_in, 0.0);
                for (r, &d) in s.delta.iter().enumerate() {
                    if d != 0.0 {
                        let row = &l.w[r * l.n_in..(r + 1) * l.n_in];
                        for (acc, w) in s.next.iter_mut().zip(row) {
                            *acc += d * w;
                        }
                    }
                }
                for (v, &a) in s.next.iter_mut().zip(input) {
                    *v *= net.activation.slope(a);
                }
                std::mem::swap(&mut s.delta, &mut s.next);
            }
        }
    }
    let mut norm = 0.0;
    for (k, l) in net.layers.iter().enumerate() {
        let o = s.offsets[k];
        for (g, w) in grad[o..o + l.w.len()].iter_mut().zip(&l.w) {
            *g += 2.0 * alpha * w / n;
            norm += w * w;
        }
    }
    sq / (n * m as f64) + alpha * norm / n
}

enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        t: i32,
        m: Vec<f64>,
        v: Vec<f64>,
    },
    Adadelta {
        eg: Vec<f64>,
        ex: Vec<f64>,
    },
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const ADADELTA_RHO: f64 = 0.95;
const ADADELTA_EPS: f64 = 1e-6;

impl Optimizer {
    fn new(solver: Solver, lr: f64, n: usize) -> Optimizer {
        match solver {
            Solver::Sgd => Optimizer::Sgd { lr },
            Solver::Adam => Optimizer::Adam {
                lr,
                t: 0,
                m: vec![0.0; n],
                v: vec![0.0; n],
            },
            Solver::Adadelta => Optimizer::Adadelta {
                eg: vec![0.0; n],
                ex: vec![0.0; n],
            },
        }
    }

    fn step(&mut self, p: &mut [f64], g: &[f64]) {
        match self {
            Optimizer::Sgd { lr } => {
                for (p, g) in p.iter_mut().zip(g) {
                    *p -= *lr * g;
                }
            }
            Optimizer::Adam { lr, t, m, v } => {
                *t += 1;
                let step = *lr * (1.0 - ADAM_BETA2.powi(*t)).sqrt() / (1.0 - ADAM_BETA1.powi(*t));
                for i in 0..p.len() {
                    m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g[i];
                    v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                    p[i] -= step * m[i] / (v[i].sqrt() + ADAM_EPS);
                }
            }
            Optimizer::Adadelta { eg, ex } => {
                for i in 0..p.len() {
                    eg[i] = ADADELTA_RHO * eg[i] + (1.0 - ADADELTA_RHO) * g[i] * g[i];
                    let dx =
                        -((ex[i] + ADADELTA_EPS).sqrt() / (eg[i] + ADADELTA_EPS).sqrt()) * g[i];
                    ex[i] = ADADELTA_RHO * ex[i] + (1.0 - ADADELTA_RHO) * dx * dx;
                    p[i] += dx;
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpTrainLog {
    pub epochs: usize,
    pub final_loss: f64,
    pub loss_curve: Vec<f64>,
}

/// Mini-batch training on scaled rows. The epoch loss is the row-weighted
/// mean of the batch losses seen during the epoch.
pub fn train_mlp(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    cfg: &MlpConfig,
) -> Result<(Network, MlpTrainLog)> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    let mut sizes = vec![xs[0].len()];
    sizes.extend_from_slice(&cfg.hidden_layers);
    sizes.push(ys[0].len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = Network::init(&sizes, cfg.activation, &mut rng);
    let mut params = net.params();
    let mut grad = vec![0.0; params.len()];
    let mut opt = Optimizer::new(cfg.solver, cfg.learning_rate, params.len());
    let mut scratch = Scratch::new(&net);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let (mut bx, mut by) = (Vec::new(), Vec::new());
    let mut best = f64::INFINITY;
    let mut stale = 0;
    let mut curve = Vec::new();
    for epoch in 0..cfg.max_iter {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            bx.clear();
            by.clear();
            bx.extend(batch.iter().map(|&i| xs[i].clone()));
            by.extend(batch.iter().map(|&i| ys[i].clone()));
            let loss = accumulate_gradient(&net, &bx, &by, cfg.alpha, &mut grad, &mut scratch);
            total += loss * batch.len() as f64;
            opt.step(&mut params, &grad);
            net.set_params(&params);
        }
        let loss = total / xs.len() as f64;
        if !loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(MlError::Diverged { epoch });
        }
        curve.push(loss);
        if loss > best - cfg.tol {
            stale += 1;
        } else {
            stale = 0;
        }
        best = best.min(loss);
        if stale >= cfg.n_iter_no_change {
            break;
        }
    }
    let final_loss = curve.last().copied().unwrap_or(f64::NAN);
    Ok((
        net,
        MlpTrainLog {
            epochs: curve.len(),
            final_loss,
            loss_curve: curve,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_output_the_bias() {
        let mut net = Network::zeros(&[3, 4, 4, 2], Activation::Tanh);
        net.layers[2].b = vec![0.25, -1.5];
        assert_eq!(net.predict_one(&[0.3, -2.0, 7.0]), vec![0.25, -1.5]);
    }

    #[test]
    fn bias_only_gradient_is_twice_mean_residual() {
        let mut net = Network::zeros(&[1, 2, 1], Activation::Sigmoid);
        net.layers[1].b = vec![0.4];
        let xs = vec![vec![0.1], vec![0.5], vec![0.9]];
        let ys = vec![vec![0.0], vec![1.0], vec![0.5]];
        let (_, g) = backprop_gradient(&net, &xs, &ys, 0.0);
        let mean_res = ((0.4 - 0.0) + (0.4 - 1.0) + (0.4 - 0.5)) / 3.0;
        assert!((g[g.len() - 1] - 2.0 * mean_res).abs() < 1e-15);
    }

    #[test]
    fn l2_term_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = Network::init(&[2, 3, 1], Activation::Relu, &mut rng);
        let xs = vec![vec![0.2, 0.7]; 4];
        let ys = vec![vec![0.1]; 4];
        let (_, g0) = backprop_gradient(&net, &xs, &ys, 0.0);
        let (_, g1) = backprop_gradient(&net, &xs, &ys, 0.3);
        let p = net.params();
        // weights of layer 0 occupy the first 6 slots, its biases the next 3
        for i in 0..6 {
            assert!((g1[i] - g0[i] - 2.0 * 0.3 * p[i] / 4.0).abs() < 1e-15);
        }
        for i in 6..9 {
            assert_eq!(g1[i], g0[i]);
        }
    }

    #[test]
    fn learns_xor() {
        let xs = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let ys = vec![vec![0.0], vec![1.0], vec![1.0], vec![0.0]];
        let cfg = MlpConfig {
            hidden_layers: vec![8],
            activation: Activation::Tanh,
            alpha: 0.0,
            tol: 1e-12,
            max_iter: 5000,
            batch_size: 4,
            learning_rate: 0.01,
            n_iter_no_change: 50,
            seed: 2,
            ..MlpConfig::default()
        };
        let (net, log) = train_mlp(&xs, &ys, &cfg).unwrap();
        assert!(net.loss(&xs, &ys, 0.0) < 1e-3, "{log:?}");
    }

    #[test]
    fn config_validation() {
        let bad = MlpConfig {
            hidden_layers: vec![5, 0],
            ..MlpConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(MlpConfig {
            tol: 0.0,
            ..MlpConfig::default()
        }
        .validate()
        .is_err());
        assert_eq!(
            MlpConfig {
                hidden_layers: vec![10, 15, 20, 15],
                ..MlpConfig::default()
            }
            .architecture(),
            "10-15-20-15"
        );
    }
}
