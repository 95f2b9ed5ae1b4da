//! Per-column min-max scaling onto [0, 1].

use crate::{Dataset, MlError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerParams {
    pub fn fit(rows: &[Vec<f64>]) -> Result<ScalerParams> {
        let first = rows.first().ok_or(MlError::EmptyDataset)?;
        let mut min = first.clone();
        let mut max = first.clone();
        for r in rows {
            if r.len() != min.len() {
                return Err(MlError::ShapeMismatch("ragged rows".into()));
            }
            for (c, &v) in r.iter().enumerate() {
                min[c] = min[c].min(v);
                max[c] = max[c].max(v);
            }
        }
        Ok(ScalerParams { min, max })
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    /// Constant columns map to 0.5.
    pub fn scale(&self, c: usize, v: f64) -> f64 {
        let (lo, hi) = (self.min[c], self.max[c]);
        if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.5
        }
    }

    pub fn unscale(&self, c: usize, s: f64) -> f64 {
        let (lo, hi) = (self.min[c], self.max[c]);
        if hi > lo {
            lo + s * (hi - lo)
        } else {
            lo
        }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(c, &v)| self.scale(c, v))
            .collect()
    }

    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(c, &s)| self.unscale(c, s))
            .collect()
    }

    pub fn apply_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }

    pub fn invert_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.invert(r)).collect()
    }
}

/// Separate scalers for the input and target columns of a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataScaler {
    pub inputs: ScalerParams,
    pub targets: ScalerParams,
}

pub fn fit_scaler(ds: &Dataset) -> Result<DataScaler> {
    Ok(DataScaler {
        inputs: ScalerParams::fit(&ds.inputs)?,
        targets: ScalerParams::fit(&ds.targets)?,
    })
}
