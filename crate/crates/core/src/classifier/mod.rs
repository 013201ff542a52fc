//! RBF-kernel SVM detector, hyperparameter search and GA feature selection.

mod cv;
mod ga;
mod scaler;
mod svm;

use thiserror::Error;

use crate::calibration::FeatureKind;

pub use cv::{cross_val_accuracy, default_c_grid, default_gamma_grid, grid_search, stratified_folds, GridResult};
pub use ga::{ga_select, GaConfig};
pub use scaler::{scale_features, MinMaxScaler};
pub use svm::{
    dual_objective, kernel_matrix, predict, rbf_kernel, solve_dual, train_svm, train_svm_masked, DualSolution, SvmModel,
    KKT_TOLERANCE, MAX_PAIR_UPDATES, MODEL_VERSION,
};

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training data contains unlabeled samples")]
    Unlabeled,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("model was trained on {model:?} features, input is {input:?}")]
    KindMismatch { model: FeatureKind, input: FeatureKind },
    #[error("solver hit the iteration cap before reaching the KKT tolerance")]
    NoConvergence,
    #[error("invalid hyperparameters C={c_reg}, gamma={gamma}")]
    BadHyperparameters { c_reg: f64, gamma: f64 },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("model version {found:?} is not supported (expected {expected:?})")]
    VersionMismatch { expected: String, found: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
