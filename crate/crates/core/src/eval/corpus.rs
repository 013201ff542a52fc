use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::synth::{synth_cover, SynthSpec};
use super::EvalError;
use crate::audio::{read_wav, snr_db, write_wav, AudioSignal};
use crate::calibration::{feature_vector_calibrated, feature_vector_plain, FeatureKind, FeatureVector, Label};
use crate::embed::{capacity_bits, embed, gen_payload, Algorithm, EmbedConfig};
use crate::features::RMelFilterbank;
use crate::seed;

pub const MANIFEST_NAME: &str = "manifest.csv";

/// Where covers come from.
#[derive(Debug, Clone)]
pub enum CoverSource {
    Files(Vec<PathBuf>),
    Synthetic(SynthSpec),
}

impl CoverSource {
    fn len(&self) -> usize {
        match self {
            CoverSource::Files(p) => p.len(),
            CoverSource::Synthetic(s) => s.count,
        }
    }

    fn load(&self, i: usize) -> Result<AudioSignal, EvalError> {
        match self {
            CoverSource::Files(p) => read_wav(&p[i]).map_err(|e| EvalError::File(p[i].clone(), e.to_string())),
            CoverSource::Synthetic(s) => synth_cover(s, i),
        }
    }
}

/// One manifest line. `path` is relative to the manifest's directory.
/// `snr_db` is the pair's SNR on the stego row and empty on the cover row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub path: String,
    pub label: Label,
    pub algorithm: Algorithm,
    pub capacity_bpb: f64,
    pub seed: u64,
    pub snr_db: Option<f64>,
}

impl ManifestRow {
    /// Pair identifier: the file stem without its `cover_` / `stego_` prefix.
    pub fn source_id(&self) -> String {
        source_id_of(Path::new(&self.path))
    }
}

pub fn source_id_of(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_prefix("cover_")
        .or_else(|| stem.strip_prefix("stego_"))
        .map(str::to_owned)
        .unwrap_or(stem)
}

pub fn write_manifest(path: impl AsRef<Path>, rows: &[ManifestRow]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["path", "label", "algorithm", "capacity_bpb", "seed", "snr_db"])?;
    for r in rows {
        w.write_record([
            r.path.clone(),
            r.label.as_str().to_owned(),
            r.algorithm.name().to_owned(),
            format!("{:?}", r.capacity_bpb),
            r.seed.to_string(),
            r.snr_db.map(|v| format!("{v:?}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestRow>, EvalError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr.deserialize().collect::<Result<Vec<ManifestRow>, _>>()?;
    Ok(rows)
}

/// Writes `cover_NNNNN.wav` / `stego_NNNNN.wav` pairs and `manifest.csv` into
/// `out_dir`. Stego `i` carries a full-capacity payload seeded by
/// `derive(cfg.seed, PAYLOAD, i)`, which is also its embedding seed.
pub fn build_corpus(covers: &CoverSource, cfg: &EmbedConfig, out_dir: impl AsRef<Path>) -> Result<Vec<ManifestRow>, EvalError> {
    cfg.validate()?;
    if covers.len() == 0 {
        return Err(EvalError::Format("no covers".into()));
    }
    if let CoverSource::Synthetic(s) = covers {
        s.validate()?;
    }
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;
    let pairs = (0..covers.len())
        .into_par_iter()
        .map(|i| -> Result<[ManifestRow; 2], EvalError> {
            let cover = covers.load(i)?;
            let item_seed = seed::derive(cfg.seed, seed::stream::PAYLOAD, i as u64);
            let item_cfg = cfg.with_seed(item_seed);
            let payload = gen_payload(capacity_bits(&item_cfg, &cover), item_seed);
            let stego = embed(&cover, &payload, &item_cfg)?;
            let cover_name = format!("cover_{i:05}.wav");
            let stego_name = format!("stego_{i:05}.wav");
            write_wav(&cover, out_dir.join(&cover_name))?;
            write_wav(&stego, out_dir.join(&stego_name))?;
            let snr = snr_db(&cover, &stego)?;
            let row = |path: String, label, snr_db| ManifestRow {
                path,
                label,
                algorithm: cfg.algorithm,
                capacity_bpb: cfg.capacity_bpb,
                seed: item_seed,
                snr_db,
            };
            Ok([row(cover_name, Label::Cover, None), row(stego_name, Label::Stego, Some(snr))])
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<ManifestRow> = pairs.into_iter().flatten().collect();
    write_manifest(out_dir.join(MANIFEST_NAME), &rows)?;
    Ok(rows)
}

/// Feature extraction settings for a manifest.
#[derive(Debug, Clone, Copy)]
pub struct ExtractConfig {
    pub kind: FeatureKind,
    pub calibration: Option<EmbedConfig>,
}

impl ExtractConfig {
    pub fn plain() -> Self {
        Self {
            kind: FeatureKind::Plain,
            calibration: None,
        }
    }

    pub fn calibrated(cal_cfg: EmbedConfig) -> Self {
        Self {
            kind: FeatureKind::Calibrated,
            calibration: Some(cal_cfg),
        }
    }
}

/// Feature vector of one file, labelled and tagged with its pair id.
pub fn extract_file(path: &Path, label: Label, cfg: &ExtractConfig) -> Result<FeatureVector, EvalError> {
    let wrap = |e: String| EvalError::File(path.to_path_buf(), e);
    let x = read_wav(path).map_err(|e| wrap(e.to_string()))?;
    let bank = RMelFilterbank::standard(x.sample_rate()).map_err(|e| wrap(e.to_string()))?;
    let mut fv = match (cfg.kind, &cfg.calibration) {
        (FeatureKind::Plain, _) => feature_vector_plain(&x, &bank),
        (FeatureKind::Calibrated, Some(c)) => feature_vector_calibrated(&x, c, &bank),
        (FeatureKind::Calibrated, None) => {
            return Err(EvalError::Format("calibrated features need an embedder config".into()))
        }
    }
    .map_err(|e| wrap(e.to_string()))?;
    fv.label = label;
    fv.source_id = source_id_of(path);
    Ok(fv)
}

/// Per-row extraction in parallel; output order is manifest order.
pub fn extract_manifest(rows: &[ManifestRow], base_dir: &Path, cfg: &ExtractConfig) -> Vec<Result<FeatureVector, EvalError>> {
    rows.par_iter()
        .map(|r| extract_file(&base_dir.join(&r.path), r.label, cfg))
        .collect()
}
