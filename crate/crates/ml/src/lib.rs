//! Surrogate regressors for flamelet tables and the MLP hyperparameter search.
//!
//! Every trainer works on min-max scaled data and is deterministic for a
//! fixed seed. [`model::TrainedModel`] bundles the fitted parameters with
//! the scaler so predictions come back in physical units.

pub mod linear;
pub mod metrics;
pub mod mlp;
pub mod model;
pub mod scaler;
pub mod svr;
pub mod tree;
pub mod tuner;

pub use fgm_core::library::Dataset;
pub use metrics::{accuracy, mse, per_target_accuracy, TargetAccuracy, TrainReport};
pub use model::{
    clamp_nonnegative, evaluate, fit, fit_and_report, load_model, save_model, train_test_split,
    Evaluation, Family, ModelSpec, TrainedModel, MODEL_MAGIC,
};
pub use scaler::{fit_scaler, DataScaler, ScalerParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MlError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged at epoch {epoch}: loss became non-finite")]
    Diverged { epoch: usize },
    #[error("SVR did not converge within {max_passes} passes")]
    NotConverged { max_passes: usize },
    #[error("expected {expected} input columns, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = MlError> = std::result::Result<T, E>;

fn invalid(msg: impl Into<String>) -> MlError {
    MlError::InvalidConfig(msg.into())
}
