//! Re-embedding calibration.
//!
//! A stego input barely changes when the embedder is applied again, while a
//! cover picks up a full embedding footprint. The calibrated feature vector is
//! therefore the higher-order statistics of `R(x̃) - R(x)`, with `R` the
//! per-frame R-MFCC matrix and `x̃` the re-embedded input. The plain vector
//! (statistics of `R(x)` itself) is kept as the uncalibrated baseline.
//!
//! Value ordering in every 116-vector: `mean_1..29, std_1..29, skew_1..29,
//! kurt_1..29`.

use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioSignal;
use crate::embed::{self, EmbedConfig, EmbedError};
use crate::features::{hos_stats, rmfcc_signal, FeatureError, RMelFilterbank, N_COEFFS};

/// Length of every feature vector.
pub const N_FEATURES: usize = 4 * N_COEFFS;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("feature file: {0}")]
    Format(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Cover,
    Stego,
    Unknown,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Cover => "cover",
            Label::Stego => "stego",
            Label::Unknown => "unknown",
        }
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cover" => Ok(Label::Cover),
            "stego" => Ok(Label::Stego),
            "unknown" => Ok(Label::Unknown),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Plain,
    Calibrated,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Plain => "plain",
            FeatureKind::Calibrated => "calibrated",
        }
    }
}

impl FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(FeatureKind::Plain),
            "calibrated" => Ok(FeatureKind::Calibrated),
            other => Err(format!("unknown feature kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Label,
    pub kind: FeatureKind,
    pub source_id: String,
    /// Embedder used for re-embedding. Not carried by the CSV feature file.
    pub embedder_used_for_calibration: Option<EmbedConfig>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>, label: Label, kind: FeatureKind, source_id: impl Into<String>) -> Self {
        Self {
            values,
            label,
            kind,
            source_id: source_id.into(),
            embedder_used_for_calibration: None,
        }
    }

    /// The 29 mean values.
    pub fn mean_block(&self) -> &[f64] {
        &self.values[..N_COEFFS]
    }
}

/// `x̃ = embed(x, payload(capacity, cfg.seed), cfg)`.
pub fn calibrate(x: &AudioSignal, cal_cfg: &EmbedConfig) -> Result<AudioSignal, EmbedError> {
    let payload = embed::gen_payload(embed::capacity_bits(cal_cfg, x), cal_cfg.seed);
    embed::embed(x, &payload, cal_cfg)
}

pub fn feature_vector_calibrated(
    x: &AudioSignal,
    cal_cfg: &EmbedConfig,
    bank: &RMelFilterbank,
) -> Result<FeatureVector, CalibrationError> {
    let reembedded = calibrate(x, cal_cfg)?;
    let base = rmfcc_signal(x, bank)?;
    let moved = rmfcc_signal(&reembedded, bank)?;
    let stats = hos_stats(&moved.difference(&base)?)?;
    Ok(FeatureVector {
        values: stats.flatten(),
        label: Label::Unknown,
        kind: FeatureKind::Calibrated,
        source_id: String::new(),
        embedder_used_for_calibration: Some(*cal_cfg),
    })
}

pub fn feature_vector_plain(x: &AudioSignal, bank: &RMelFilterbank) -> Result<FeatureVector, CalibrationError> {
    let stats = hos_stats(&rmfcc_signal(x, bank)?)?;
    Ok(FeatureVector::new(stats.flatten(), Label::Unknown, FeatureKind::Plain, ""))
}

/// Column names of the 116 values.
pub fn feature_names() -> Vec<String> {
    ["mean", "std", "skew", "kurt"]
        .iter()
        .flat_map(|stat| (1..=N_COEFFS).map(move |j| format!("{stat}_{j}")))
        .collect()
}

pub fn write_features_csv<W: io::Write>(w: W, rows: &[FeatureVector]) -> Result<(), CalibrationError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["source_id".to_string(), "label".to_string(), "kind".to_string()];
    header.extend(feature_names());
    out.write_record(&header)?;
    for fv in rows {
        if fv.values.len() != N_FEATURES {
            return Err(CalibrationError::Format(format!(
                "{}: {} values, expected {N_FEATURES}",
                fv.source_id,
                fv.values.len()
            )));
        }
        let mut rec = vec![fv.source_id.clone(), fv.label.as_str().into(), fv.kind.as_str().into()];
        // shortest round-trip representation
        rec.extend(fv.values.iter().map(|v| format!("{v:?}")));
        out.write_record(&rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_features_csv<R: io::Read>(r: R) -> Result<Vec<FeatureVector>, CalibrationError> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers()?.clone();
    let expected: Vec<String> = ["source_id", "label", "kind"]
        .iter()
        .map(|s| s.to_string())
        .chain(feature_names())
        .collect();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(CalibrationError::Format("unexpected header".into()));
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: String| CalibrationError::Format(format!("row {}: {what}", line + 1));
        let label = rec[1].parse::<Label>().map_err(bad)?;
        let kind = rec[2].parse::<FeatureKind>().map_err(bad)?;
        let values = rec
            .iter()
            .skip(3)
            .map(|s| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(FeatureVector::new(values, label, kind, &rec[0]));
    }
    Ok(rows)
}
