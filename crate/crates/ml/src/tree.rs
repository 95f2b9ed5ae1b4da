//! CART regression trees (squared-error splits, mean leaves) and random
//! forests of them, one forest per target column.

use crate::{invalid, MlError, Result};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// features tried per split; `None` means all
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// rows with `x[feature] <= threshold` go left
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Grow a tree on the rows listed in `rows` (repeats allowed).
    pub fn fit(
        xs: &[Vec<f64>],
        y: &[f64],
        rows: &[usize],
        params: &TreeParams,
        rng: &mut impl Rng,
    ) -> Tree {
        let mut tree = Tree { nodes: Vec::new() };
        let mut work = rows.to_vec();
        tree.grow(xs, y, &mut work, 0, params, rng);
        tree
    }

    fn grow(
        &mut self,
        xs: &[Vec<f64>],
        y: &[f64],
        rows: &mut [usize],
        depth: usize,
        params: &TreeParams,
        rng: &mut impl Rng,
    ) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });
        let depth_ok = params.max_depth.is_none_or(|d| depth < d);
        let pure = rows.iter().all(|&r| y[r] == y[rows[0]]);
        if !depth_ok || pure || rows.len() < 2 * params.min_samples_leaf.max(1) {
            return id;
        }
        let Some((feature, threshold)) = best_split(xs, y, rows, params, rng) else {
            return id;
        };
        // stable partition keeps the row order inside each child
        let (mut l, mut r): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| xs[i][feature] <= threshold);
        let left = self.grow(xs, y, &mut l, depth + 1, params, rng);
        let right = self.grow(xs, y, &mut r, depth + 1, params, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn d(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + d(t, left).max(d(t, right)),
            }
        }
        d(self, 0)
    }
}

/// Split minimising the summed squared error of the two children. Ties keep
/// the first candidate in (feature, threshold) order.
fn best_split(
    xs: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    params: &TreeParams,
    rng: &mut impl Rng,
) -> Option<(usize, f64)> {
    let n_feat = xs[rows[0]].len();
    let features: Vec<usize> = match params.max_features {
        Some(k) if k < n_feat => {
            let mut f = sample(rng, n_feat, k).into_vec();
            f.sort_unstable();
            f
        }
        _ => (0..n_feat).collect(),
    };
    let min_leaf = params.min_samples_leaf.max(1);
    let n = rows.len();
    // centred targets keep the prefix-sum costs free of cancellation
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
    let d = |r: usize| y[r] - mean;
    let total: f64 = rows.iter().map(|&r| d(r)).sum();
    let total_sq: f64 = rows.iter().map(|&r| d(r) * d(r)).sum();
    // candidates within rounding of the incumbent count as ties, which
    // keeps splits that induce the same partition from flipping features
    let slack = 1e-9 * total_sq;
    let mut best: Option<(f64, usize, f64)> = None;
    let mut sorted = rows.to_vec();
    for &f in &features {
        sorted.sort_by(|&a, &b| xs[a][f].total_cmp(&xs[b][f]));
        let (mut s, mut sq) = (0.0, 0.0);
        for k in 0..n - 1 {
            let v = d(sorted[k]);
            s += v;
            sq += v * v;
            let (a, b) = (xs[sorted[k]][f], xs[sorted[k + 1]][f]);
            let nl = k + 1;
            if a == b || nl < min_leaf || n - nl < min_leaf {
                continue;
            }
            let nr = (n - nl) as f64;
            let (sr, sqr) = (total - s, total_sq - sq);
            let cost = (sq - s * s / nl as f64) + (sqr - sr * sr / nr);
            if best.is_none_or(|(c, _, _)| cost < c - slack) {
                let mut t = 0.5 * (a + b);
                if t >= b {
                    t = a;
                }
                best = Some((cost, f, t));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfConfig {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl RfConfig {
    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            max_features: self.max_features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Arithmetic mean of the member predictions.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64
    }
}

/// One forest per target column. Tree seeds are drawn up front from the
/// configured seed, so the result does not depend on thread scheduling.
pub fn train_rf(xs: &[Vec<f64>], ys: &[Vec<f64>], cfg: &RfConfig) -> Result<Vec<Forest>> {
    if xs.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    if cfg.n_trees == 0 || cfg.min_samples_leaf == 0 || cfg.max_features == Some(0) {
        return Err(invalid(
            "n_trees, min_samples_leaf and max_features must be positive",
        ));
    }
    let n = xs.len();
    let n_out = ys[0].len();
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let seeds: Vec<Vec<u64>> = (0..n_out)
        .map(|_| (0..cfg.n_trees).map(|_| master.gen()).collect())
        .collect();
    let params = cfg.tree_params();
    let forests = (0..n_out)
        .into_par_iter()
        .map(|t| {
            let y: Vec<f64> = ys.iter().map(|r| r[t]).collect();
            let trees = seeds[t]
                .par_iter()
                .map(|&s| {
                    let mut rng = ChaCha8Rng::seed_from_u64(s);
                    let rows: Vec<usize> = if cfg.bootstrap {
                        (0..n).map(|_| rng.gen_range(0..n)).collect()
                    } else {
                        (0..n).collect()
                    };
                    Tree::fit(xs, &y, &rows, &params, &mut rng)
                })
                .collect();
            Forest { trees }
        })
        .collect();
    Ok(forests)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_target_is_a_single_leaf() {
        let xs: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let ys = vec![vec![2.5]; 10];
        let f = train_rf(&xs, &ys, &RfConfig::default()).unwrap();
        for x in &xs {
            assert_eq!(f[0].predict(x), 2.5);
        }
        assert!(f[0].trees.iter().all(|t| t.nodes.len() == 1));
    }

    #[test]
    fn depth_limit_and_leaf_size() {
        let xs: Vec<Vec<f64>> = (0..64).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        let rows: Vec<usize> = (0..64).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = TreeParams {
            max_depth: Some(3),
            min_samples_leaf: 5,
            max_features: None,
        };
        let t = Tree::fit(&xs, &y, &rows, &p, &mut rng);
        assert!(t.depth() <= 3);
    }

    #[test]
    fn split_threshold_separates_neighbours() {
        let xs = vec![vec![1.0], vec![2.0]];
        let y = [0.0, 1.0];
        let t = Tree::fit(
            &xs,
            &y,
            &[0, 1],
            &TreeParams::default(),
            &mut ChaCha8Rng::seed_from_u64(0),
        );
        assert_eq!(t.predict(&[1.0]), 0.0);
        assert_eq!(t.predict(&[2.0]), 1.0);
        assert_eq!(t.predict(&[1.5]), 0.0);
    }
}
