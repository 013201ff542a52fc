//! Calibrated audio steganalysis.
//!
//! The crate embeds test payloads into PCM audio, extracts reversed-Mel
//! cepstral features (plain, or calibrated against a re-embedded copy of the
//! input), trains an RBF-kernel SVM and runs a repeated 70/30 evaluation with
//! sensitivity, specificity, accuracy, ROC and AUC.

pub mod audio;
pub mod calibration;
pub mod classifier;
pub mod dct;
pub mod embed;
pub mod eval;
pub mod features;
pub mod seed;

pub use audio::{AudioError, AudioSignal};
pub use calibration::{FeatureKind, FeatureVector, Label};
pub use classifier::{SvmError, SvmModel};
pub use embed::{Algorithm, EmbedConfig, EmbedError, Payload};
pub use features::{FeatureError, RMelFilterbank};
