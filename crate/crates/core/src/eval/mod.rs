//! Evaluation protocol: corpus construction, repeated stratified 70/30
//! splits, sensitivity / specificity / accuracy, ROC and AUC, and the
//! plain-versus-calibrated comparison.

mod corpus;
mod roc;
mod synth;
mod trials;

use std::path::PathBuf;

use thiserror::Error;

pub use corpus::{
    build_corpus, extract_file, extract_manifest, read_manifest, source_id_of, write_manifest, CoverSource, ExtractConfig,
    ManifestRow, MANIFEST_NAME,
};
pub use roc::{roc_and_auc, RocCurve};
pub use synth::{synth_cover, SynthSpec, SYNTH_BIT_DEPTH, SYNTH_FLOOR_DBFS, SYNTH_PEAK};
pub use trials::{
    compare_feature_kinds, mean_std, run_trials, scatter_data, split_indices, split_train_test, welch_t, Comparison,
    Confusion, EvalConfig, EvalReport, Hyper, ScatterData, ScatterSelection, TrialResult, DEFAULT_REPETITIONS,
    DEFAULT_TRAIN_FRAC, REPORT_VERSION,
};

use crate::audio::AudioError;
use crate::calibration::CalibrationError;
use crate::classifier::SvmError;
use crate::embed::EmbedError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("both cover and stego samples are required")]
    SingleClass,
    #[error("{0}")]
    Format(String),
    #[error("{path}: {message}", path = .0.display(), message = .1)]
    File(PathBuf, String),
    #[error("report version {found:?} is not supported (expected {expected:?})")]
    VersionMismatch { expected: String, found: String },
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
