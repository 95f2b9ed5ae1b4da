//! Accuracy and MSE in min-max scaled target space.
//!
//! Accuracy is `100 (1 - RMSE)` with the RMSE taken per scaled target column
//! and averaged over columns, clamped to [0, 100].

use crate::{MlError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetAccuracy {
    pub name: String,
    pub accuracy: f64,
}

/// One evaluated model, the Table-8 row plus per-target accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub accuracy: f64,
    pub mse: f64,
    /// wall clock, s
    pub train_time: f64,
    /// wall clock, s
    pub predict_time: f64,
    pub per_target: Vec<TargetAccuracy>,
}

impl TrainReport {
    pub fn target_accuracy(&self, name: &str) -> Option<f64> {
        self.per_target
            .iter()
            .find(|t| t.name == name)
            .map(|t| t.accuracy)
    }
}

fn check_shapes(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<usize> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(MlError::ShapeMismatch(format!(
            "{} predicted rows vs {} reference rows",
            pred.len(),
            truth.len()
        )));
    }
    let w = truth[0].len();
    if pred.iter().chain(truth).any(|r| r.len() != w) {
        return Err(MlError::ShapeMismatch("rows differ in width".into()));
    }
    Ok(w)
}

fn column_rmse(pred: &[Vec<f64>], truth: &[Vec<f64>], c: usize) -> f64 {
    let s: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p[c] - t[c]).powi(2))
        .sum();
    (s / pred.len() as f64).sqrt()
}

fn to_percent(rmse: f64) -> f64 {
    (100.0 * (1.0 - rmse)).clamp(0.0, 100.0)
}

/// Both arguments in scaled space.
pub fn accuracy(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    let w = check_shapes(pred, truth)?;
    let mean_rmse = (0..w).map(|c| column_rmse(pred, truth, c)).sum::<f64>() / w as f64;
    Ok(to_percent(mean_rmse))
}

pub fn per_target_accuracy(
    pred: &[Vec<f64>],
    truth: &[Vec<f64>],
    names: &[String],
) -> Result<Vec<TargetAccuracy>> {
    let w = check_shapes(pred, truth)?;
    if names.len() != w {
        return Err(MlError::ShapeMismatch(format!(
            "{} names for {w} columns",
            names.len()
        )));
    }
    Ok(names
        .iter()
        .enumerate()
        .map(|(c, n)| TargetAccuracy {
            name: n.clone(),
            accuracy: to_percent(column_rmse(pred, truth, c)),
        })
        .collect())
}

/// Mean over all entries of the squared error, scaled space.
pub fn mse(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    let w = check_shapes(pred, truth)?;
    let s: f64 = pred
        .iter()
        .zip(truth)
        .flat_map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a - b).powi(2)))
        .sum();
    Ok(s / (pred.len() * w) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let t = vec![vec![0.1, 0.9], vec![0.4, 0.2]];
        assert_eq!(accuracy(&t, &t).unwrap(), 100.0);
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn uniform_offset_gives_ninety() {
        let t = vec![vec![0.25, 0.5], vec![0.5, 0.25], vec![0.0, 0.75]];
        let p: Vec<Vec<f64>> = t
            .iter()
            .map(|r| r.iter().map(|v| v + 0.1).collect())
            .collect();
        assert!((accuracy(&p, &t).unwrap() - 90.0).abs() < 1e-9);
        assert!((mse(&p, &t).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn clamped_and_shape_checked() {
        let t = vec![vec![0.0]];
        assert_eq!(accuracy(&[vec![3.0]], &t).unwrap(), 0.0);
        assert!(accuracy(&[vec![0.0, 1.0]], &t).is_err());
        assert!(mse(&[], &[]).is_err());
    }
}
