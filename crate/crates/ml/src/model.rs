//! Family dispatch, fitted-model container, evaluation and the model file.

use crate::linear::{train_lr_sgd, LinearModel, LrConfig};
use crate::metrics::{self, TrainReport};
use crate::mlp::{train_mlp, MlpConfig, Network};
use crate::scaler::{fit_scaler, DataScaler};
use crate::svr::{train_svr, SvrConfig, SvrModel};
use crate::tree::{train_rf, Forest, RfConfig};
use crate::{Dataset, MlError, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lr,
    Mlp,
    Rf,
    Svr,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Lr => "lr",
            Family::Mlp => "mlp",
            Family::Rf => "rf",
            Family::Svr => "svr",
        })
    }
}

/// Which family to train, with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "config", rename_all = "lowercase")]
pub enum ModelSpec {
    Lr(LrConfig),
    Mlp(MlpConfig),
    Rf(RfConfig),
    Svr(SvrConfig),
}

impl ModelSpec {
    pub fn family(&self) -> Family {
        match self {
            ModelSpec::Lr(_) => Family::Lr,
            ModelSpec::Mlp(_) => Family::Mlp,
            ModelSpec::Rf(_) => Family::Rf,
            ModelSpec::Svr(_) => Family::Svr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "lowercase")]
pub enum Params {
    Lr(LinearModel),
    Mlp(Network),
    /// one forest per target
    Rf(Vec<Forest>),
    /// one model per target
    Svr(Vec<SvrModel>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainMeta {
    /// epochs (LR, MLP) or SMO sweeps of the slowest target (SVR); 0 for RF
    pub epochs: usize,
    /// final training loss in scaled space, when the trainer tracks one
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: ModelSpec,
    pub input_names: Vec<String>,
    pub target_names: Vec<String>,
    pub scaler: DataScaler,
    pub params: Params,
    pub meta: TrainMeta,
}

/// Fit `spec` on `ds`; the scaler is fitted on the same rows.
pub fn fit(spec: &ModelSpec, ds: &Dataset) -> Result<TrainedModel> {
    if ds.is_empty() {
        return Err(MlError::EmptyDataset);
    }
    ds.validate()
        .map_err(|e| MlError::ShapeMismatch(e.to_string()))?;
    let scaler = fit_scaler(ds)?;
    let xs = scaler.inputs.apply_rows(&ds.inputs);
    let ys = scaler.targets.apply_rows(&ds.targets);
    let (params, meta) = match spec {
        ModelSpec::Lr(c) => {
            let (m, h) = train_lr_sgd(&xs, &ys, c)?;
            let meta = TrainMeta {
                epochs: h.len(),
                final_loss: h.last().copied(),
            };
            (Params::Lr(m), meta)
        }
        ModelSpec::Mlp(c) => {
            let (net, log) = train_mlp(&xs, &ys, c)?;
            let meta = TrainMeta {
                epochs: log.epochs,
                final_loss: Some(log.final_loss).filter(|v| v.is_finite()),
            };
            (Params::Mlp(net), meta)
        }
        ModelSpec::Rf(c) => (
            Params::Rf(train_rf(&xs, &ys, c)?),
            TrainMeta {
                epochs: 0,
                final_loss: None,
            },
        ),
        ModelSpec::Svr(c) => {
            let models = train_svr(&xs, &ys, c)?;
            let meta = TrainMeta {
                epochs: models.iter().map(|m| m.passes).max().unwrap_or(0),
                final_loss: None,
            };
            (Params::Svr(models), meta)
        }
    };
    Ok(TrainedModel {
        spec: spec.clone(),
        input_names: ds.input_names.clone(),
        target_names: ds.target_names.clone(),
        scaler,
        params,
        meta,
    })
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        self.spec.family()
    }

    /// Number of fitted scalar parameters (tree nodes for forests, support
    /// coefficients for SVR).
    pub fn n_params(&self) -> usize {
        match &self.params {
            Params::Lr(m) => m.bias.len() * (1 + self.input_names.len()),
            Params::Mlp(n) => n.n_params(),
            Params::Rf(f) => f.iter().flat_map(|f| &f.trees).map(|t| t.nodes.len()).sum(),
            Params::Svr(s) => s.iter().map(|m| m.coef.len() + 1).sum(),
        }
    }

    /// Forward pass on already-scaled inputs, result in scaled target space.
    pub fn predict_scaled(&self, xs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match &self.params {
            Params::Lr(m) => xs.iter().map(|x| m.predict_one(x)).collect(),
            Params::Mlp(n) => xs.iter().map(|x| n.predict_one(x)).collect(),
            Params::Rf(f) => xs
                .iter()
                .map(|x| f.iter().map(|t| t.predict(x)).collect())
                .collect(),
            Params::Svr(s) => xs
                .iter()
                .map(|x| s.iter().map(|m| m.predict(x)).collect())
                .collect(),
        }
    }

    /// Physical inputs in, physical targets out.
    pub fn predict(&self, inputs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let expected = self.input_names.len();
        if let Some(bad) = inputs.iter().find(|r| r.len() != expected) {
            return Err(MlError::DimensionMismatch {
                expected,
                got: bad.len(),
            });
        }
        let xs = self.scaler.inputs.apply_rows(inputs);
        Ok(self.scaler.targets.invert_rows(&self.predict_scaled(&xs)))
    }
}

/// Score of a fitted model on a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub report: TrainReport,
    /// negative predicted values per target column (physical units)
    pub negative_counts: Vec<(String, usize)>,
    pub predictions: Vec<Vec<f64>>,
}

/// Accuracy and MSE are computed in the model's own scaled target space.
pub fn evaluate(model: &TrainedModel, ds: &Dataset) -> Result<Evaluation> {
    if ds.target_names != model.target_names {
        return Err(MlError::ShapeMismatch(
            "dataset targets differ from the model's".into(),
        ));
    }
    let expected = model.input_names.len();
    if ds.n_inputs() != expected {
        return Err(MlError::DimensionMismatch {
            expected,
            got: ds.n_inputs(),
        });
    }
    let start = Instant::now();
    let ps = model.predict_scaled(&model.scaler.inputs.apply_rows(&ds.inputs));
    let pred = model.scaler.targets.invert_rows(&ps);
    let predict_time = start.elapsed().as_secs_f64();
    let ts = model.scaler.targets.apply_rows(&ds.targets);
    let negative_counts = model
        .target_names
        .iter()
        .enumerate()
        .map(|(c, n)| (n.clone(), pred.iter().filter(|r| r[c] < 0.0).count()))
        .collect();
    Ok(Evaluation {
        report: TrainReport {
            accuracy: metrics::accuracy(&ps, &ts)?,
            mse: metrics::mse(&ps, &ts)?,
            train_time: 0.0,
            predict_time,
            per_target: metrics::per_target_accuracy(&ps, &ts, &model.target_names)?,
        },
        negative_counts,
        predictions: pred,
    })
}

/// Copy of `predictions` with negative values raised to zero, for consumers
/// that need physical mass fractions. Evaluation never applies it.
pub fn clamp_nonnegative(predictions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    predictions
        .iter()
        .map(|r| r.iter().map(|v| v.max(0.0)).collect())
        .collect()
}

/// Train on `train`, score on `test`, with wall-clock timings filled in.
pub fn fit_and_report(
    spec: &ModelSpec,
    train: &Dataset,
    test: &Dataset,
) -> Result<(TrainedModel, Evaluation)> {
    let start = Instant::now();
    let model = fit(spec, train)?;
    let train_time = start.elapsed().as_secs_f64();
    let mut ev = evaluate(&model, test)?;
    ev.report.train_time = train_time;
    Ok((model, ev))
}

/// Seeded shuffle; the first `round(n · test_fraction)` shuffled rows form
/// the test set. Both parts keep the original row order.
pub fn train_test_split(ds: &Dataset, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
    let n = ds.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((n as f64) * test_fraction.clamp(0.0, 1.0)).round() as usize;
    let (test, train) = idx.split_at(n_test);
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (ds.select(&train), ds.select(&test))
}

pub const MODEL_MAGIC: &str = "FGM-MODEL 1";

/// Text file: magic line, pretty JSON body, `sha256 <hex>` of the body.
pub fn model_to_text(model: &TrainedModel) -> String {
    let body = serde_json::to_string_pretty(model).expect("model serializes");
    let body = format!("{MODEL_MAGIC}\n{body}\n");
    let hash = fgm_core::content_hash(body.as_bytes());
    format!("{body}sha256 {hash}\n")
}

pub fn model_from_text(text: &str) -> Result<TrainedModel> {
    let fmt = |m: &str| MlError::Format(m.to_string());
    let cut = text
        .rfind("sha256 ")
        .ok_or_else(|| fmt("missing checksum"))?;
    let (body, trailer) = text.split_at(cut);
    if fgm_core::content_hash(body.as_bytes()) != trailer["sha256 ".len()..].trim() {
        return Err(fmt("checksum mismatch"));
    }
    let json = body
        .strip_prefix(MODEL_MAGIC)
        .and_then(|b| b.strip_prefix('\n'))
        .ok_or_else(|| fmt("not a model file"))?;
    serde_json::from_str(json).map_err(|e| MlError::Format(e.to_string()))
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_text(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    model_from_text(&std::fs::read_to_string(path)?)
}
