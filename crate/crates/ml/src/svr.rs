//! ε-insensitive support vector regression, one model per target column.
//!
//! The dual is posed over `2n` box-constrained variables `a = [α; α*]` with
//! signs `s = [+1; −1]`:
//!
//! ```text
//! min ½ aᵀQa + pᵀa   s.t.  sᵀa = 0,  0 ≤ a ≤ C
//! Q_kl = s_k s_l K(x_k, x_l),  p = [ε − y; ε + y]
//! ```
//!
//! and solved by SMO on the maximal violating pair until the KKT gap falls
//! below `tol`. The regression coefficients are `β_i = α_i − α*_i`.

use crate::{invalid, MlError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Linear,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvrConfig {
    pub kernel: Kernel,
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` picks `1 / (n_features · Var(X))` at fit time
    pub gamma: Option<f64>,
    /// KKT violation allowed at convergence
    pub tol: f64,
    /// budget of pair updates, in units of the training-set size
    pub max_passes: usize,
    /// kept for a uniform config schema; the solver itself is deterministic
    pub seed: u64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            kernel: Kernel::Rbf,
            c: 10.0,
            epsilon: 0.01,
            gamma: None,
            tol: 1e-3,
            max_passes: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: Kernel,
    pub gamma: f64,
    pub support: Vec<Vec<f64>>,
    pub coef: Vec<f64>,
    pub bias: f64,
    /// pair updates divided by the training-set size, rounded up
    pub passes: usize,
}

fn kernel(k: Kernel, gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    match k {
        Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        Kernel::Rbf => (-gamma * a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>()).exp(),
    }
}

impl SvrModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.bias
            + self
                .support
                .iter()
                .zip(&self.coef)
                .map(|(s, c)| c * kernel(self.kernel, self.gamma, s, x))
                .sum::<f64>()
    }
}

fn default_gamma(xs: &[Vec<f64>]) -> f64 {
    let n = xs.len() as f64;
    let d = xs[0].len();
    let all = xs.iter().flatten();
    let mean = all.clone().sum::<f64>() / (n * d as f64);
    let var = all.map(|v| (v - mean).powi(2)).sum::<f64>() / (n * d as f64);
    if var > 0.0 {
        1.0 / (d as f64 * var)
    } else {
        1.0
    }
}

const TAU: f64 = 1e-12;

pub fn train_svr_column(xs: &[Vec<f64>], y: &[f64], cfg: &SvrConfig) -> Result<SvrModel> {
    let n = xs.len();
    if n == 0 {
        return Err(MlError::EmptyDataset);
    }
    if !(cfg.c > 0.0)
        || !(cfg.epsilon >= 0.0)
        || !(cfg.tol > 0.0)
        || cfg.gamma.is_some_and(|g| !(g > 0.0))
    {
        return Err(invalid(
            "SVR needs C > 0, epsilon >= 0, tol > 0 and gamma > 0",
        ));
    }
    let gamma = cfg.gamma.unwrap_or_else(|| default_gamma(xs));
    let k: Vec<f64> = (0..n * n)
        .map(|ij| kernel(cfg.kernel, gamma, &xs[ij / n], &xs[ij % n]))
        .collect();
    let c = cfg.c;
    let m = 2 * n;
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let q = |a: usize, b: usize| sign(a) * sign(b) * k[(a % n) * n + b % n];
    let mut a = vec![0.0; m];
    let mut g: Vec<f64> = (0..m)
        .map(|t| {
            if t < n {
                cfg.epsilon - y[t]
            } else {
                cfg.epsilon + y[t - n]
            }
        })
        .collect();
    let up = |a: &[f64], t: usize| if t < n { a[t] < c } else { a[t] > 0.0 };
    let low = |a: &[f64], t: usize| if t < n { a[t] > 0.0 } else { a[t] < c };
    let budget = cfg.max_passes.saturating_mul(n);
    let mut iters = 0;
    loop {
        // maximal violating pair, first index on ties
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..m {
            let v = -sign(t) * g[t];
            if up(&a, t) && v > gmax {
                (i, gmax) = (t, v);
            }
            if low(&a, t) && v < gmin {
                (j, gmin) = (t, v);
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < cfg.tol {
            break;
        }
        if iters == budget {
            return Err(MlError::NotConverged {
                max_passes: cfg.max_passes,
            });
        }
        iters += 1;
        let (old_i, old_j) = (a[i], a[j]);
        if sign(i) != sign(j) {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if diff > 0.0 {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = diff;
                }
            } else if a[i] < 0.0 {
                a[i] = 0.0;
                a[j] = -diff;
            }
            if diff > 0.0 {
                if a[i] > c {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if a[j] > c {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if sum > c {
                if a[i] > c {
                    a[i] = c;
                    a[j] = sum - c;
                }
                if a[j] > c {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else {
                if a[j] < 0.0 {
                    a[j] = 0.0;
                    a[i] = sum;
                }
                if a[i] < 0.0 {
                    a[i] = 0.0;
                    a[j] = sum;
                }
            }
        }
        let (di, dj) = (a[i] - old_i, a[j] - old_j);
        for (t, gt) in g.iter_mut().enumerate() {
            *gt += q(t, i) * di + q(t, j) * dj;
        }
    }
    let bias = -rho(&a, &g, c, n);
    let beta: Vec<f64> = (0..n).map(|t| a[t] - a[t + n]).collect();
    let keep: Vec<usize> = (0..n).filter(|&t| beta[t] != 0.0).collect();
    Ok(SvrModel {
        kernel: cfg.kernel,
        gamma,
        support: keep.iter().map(|&t| xs[t].clone()).collect(),
        coef: keep.iter().map(|&t| beta[t]).collect(),
        bias,
        passes: iters.div_ceil(n),
    })
}

/// Offset from the KKT conditions: mean of `s_t G_t` over free variables,
/// otherwise the midpoint of the feasible interval.
fn rho(a: &[f64], g: &[f64], c: f64, n: usize) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..a.len() {
        let positive = t < n;
        let yg = if positive { g[t] } else { -g[t] };
        if a[t] >= c {
            if positive {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if a[t] <= 0.0 {
            if positive {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum += yg;
            free += 1;
        }
    }
    if free > 0 {
        sum / free as f64
    } else {
        0.5 * (ub + lb)
    }
}

pub fn train_svr(xs: &[Vec<f64>], ys: &[Vec<f64>], cfg: &SvrConfig) -> Result<Vec<SvrModel>> {
    use rayon::prelude::*;
    if xs.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    (0..ys[0].len())
        .into_par_iter()
        .map(|t| {
            let y: Vec<f64> = ys.iter().map(|r| r[t]).collect();
            train_svr_column(xs, &y, cfg)
        })
        .collect()
}
