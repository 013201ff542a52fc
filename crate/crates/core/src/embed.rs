//! Data-hiding algorithms. They synthesize stego corpora and double as the
//! re-embedding step of calibration, so every one of them is a deterministic
//! function of `(cover, payload, cfg.seed)`.
//!
//! * `LsbReplace` overwrites the `k` low bits of consecutive samples.
//! * `LsbMatch` applies ±1 matching on a seeded permutation of samples. It
//!   stands in for graph-exchange tools such as StegHide; it is not
//!   compatible with them.
//! * `Dsss` adds a seeded ±1 chip sequence per payload bit, scaled to hit a
//!   target SNR.
//! * `CoxDct` scales the largest AC coefficients of a whole-signal DCT.

use std::f64::consts::PI;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{int_range, quantize, snr_db_samples, AudioError, AudioSignal};
use crate::dct::{dct2_ortho, idct2_ortho};
use crate::seed;

/// Default DSSS target SNR in dB.
pub const DSSS_DEFAULT_TARGET_SNR_DB: f64 = 27.7;
/// Minimum number of chips per payload bit.
pub const DSSS_MIN_CHIPS: usize = 64;
/// Chip block length used when sizing a DSSS payload to a cover.
pub const DSSS_BLOCK_LEN: usize = 1024;
/// Number of AC coefficients modified by the Cox embedder.
pub const COX_COEFFS: usize = 1000;
/// Default Cox strength; gives a mean SNR near 19.3 dB on the synthetic covers.
pub const COX_DEFAULT_STRENGTH: f64 = 0.115;
/// Payload size used when sizing a Cox payload to a cover.
pub const COX_PAYLOAD_BITS: usize = 64;

const PERMUTATION_STREAM: u64 = 101;
const SIGN_STREAM: u64 = 102;
const CHIP_STREAM: u64 = 103;
const WATERMARK_STREAM: u64 = 104;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("payload of {bits} bits exceeds capacity of {capacity} bits")]
    PayloadTooLarge { bits: usize, capacity: usize },
    #[error("neither strength nor target_snr_db is set")]
    NoTarget,
    #[error("signal too short: need {needed} samples, got {got}")]
    SignalTooShort { needed: usize, got: usize },
    #[error("invalid embedding config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    LsbReplace,
    LsbMatch,
    Dsss,
    CoxDct,
}

impl Algorithm {
    pub fn is_lsb(self) -> bool {
        matches!(self, Algorithm::LsbReplace | Algorithm::LsbMatch)
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::LsbReplace => "lsb-replace",
            Algorithm::LsbMatch => "lsb-match",
            Algorithm::Dsss => "dsss",
            Algorithm::CoxDct => "cox-dct",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = EmbedError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lsb-replace" => Ok(Algorithm::LsbReplace),
            "lsb-match" => Ok(Algorithm::LsbMatch),
            "dsss" => Ok(Algorithm::Dsss),
            "cox-dct" | "cox" => Ok(Algorithm::CoxDct),
            other => Err(EmbedError::InvalidConfig(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbedConfig {
    pub algorithm: Algorithm,
    /// Capacity in percent of cover bits; LSB family only.
    pub capacity_bpb: f64,
    /// Watermark amplitude (DSSS) or multiplicative strength (Cox).
    pub strength: Option<f64>,
    /// DSSS target SNR; takes precedence over `strength` when both are set.
    pub target_snr_db: Option<f64>,
    pub seed: u64,
}

impl EmbedConfig {
    pub fn lsb_replace(capacity_bpb: f64, seed: u64) -> Self {
        Self {
            algorithm: Algorithm::LsbReplace,
            capacity_bpb,
            strength: None,
            target_snr_db: None,
            seed,
        }
    }

    pub fn lsb_match(capacity_bpb: f64, seed: u64) -> Self {
        Self {
            algorithm: Algorithm::LsbMatch,
            ..Self::lsb_replace(capacity_bpb, seed)
        }
    }

    pub fn dsss(target_snr_db: f64, seed: u64) -> Self {
        Self {
            algorithm: Algorithm::Dsss,
            capacity_bpb: 0.0,
            strength: None,
            target_snr_db: Some(target_snr_db),
            seed,
        }
    }

    pub fn cox(strength: f64, seed: u64) -> Self {
        Self {
            algorithm: Algorithm::CoxDct,
            capacity_bpb: 0.0,
            strength: Some(strength),
            target_snr_db: None,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.algorithm.is_lsb() {
            if !(self.capacity_bpb > 0.0 && self.capacity_bpb <= 100.0) {
                return Err(EmbedError::InvalidConfig(format!(
                    "capacity_bpb {} outside (0, 100]",
                    self.capacity_bpb
                )));
            }
        } else if let Some(s) = self.strength {
            if !(s > 0.0) {
                return Err(EmbedError::InvalidConfig(format!("strength {s} must be positive")));
            }
        }
        Ok(())
    }
}

/// How an LSB capacity maps onto a cover: `bits_per_sample` low bits in every
/// `stride`-th sample. 25/12.5/6.25 % of a 16-bit cover become k = 4/2/1 with
/// stride 1; 3.125/1.56/0.78 % become k = 1 with stride 2/4/8.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LsbSchedule {
    pub bits_per_sample: usize,
    pub stride: usize,
}

impl LsbSchedule {
    pub fn from_capacity(capacity_bpb: f64, bit_depth: u16) -> Self {
        let per_sample = capacity_bpb * bit_depth as f64 / 100.0;
        if per_sample >= 1.0 {
            Self {
                bits_per_sample: (per_sample.round() as usize).clamp(1, bit_depth as usize),
                stride: 1,
            }
        } else {
            Self {
                bits_per_sample: 1,
                stride: ((1.0 / per_sample).round() as usize).max(1),
            }
        }
    }

    pub fn payload_bits(&self, n_samples: usize) -> usize {
        self.bits_per_sample * (n_samples / self.stride)
    }
}

/// Payload size that `cfg` embeds into `cover` when sizing automatically
/// (corpus generation and calibration).
pub fn capacity_bits(cfg: &EmbedConfig, cover: &AudioSignal) -> usize {
    match cfg.algorithm {
        Algorithm::LsbReplace => {
            LsbSchedule::from_capacity(cfg.capacity_bpb, cover.bit_depth()).payload_bits(cover.len())
        }
        Algorithm::LsbMatch => {
            let s = LsbSchedule::from_capacity(cfg.capacity_bpb, cover.bit_depth());
            // matching carries one bit per selected sample
            cover.len() / s.stride
        }
        Algorithm::Dsss => (cover.len() / DSSS_BLOCK_LEN).max(usize::from(cover.len() >= DSSS_MIN_CHIPS)),
        Algorithm::CoxDct => COX_PAYLOAD_BITS,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Payload {
    pub bits: Vec<u8>,
}

impl Payload {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Uniform random bits: successive `next_u64` outputs of the seeded
/// generator, consumed least-significant bit first.
pub fn gen_payload(n_bits: usize, seed: u64) -> Payload {
    let mut rng = seed::rng(seed);
    let mut bits = Vec::with_capacity(n_bits);
    while bits.len() < n_bits {
        let word = rng.next_u64();
        let take = (n_bits - bits.len()).min(64);
        bits.extend((0..take).map(|i| ((word >> i) & 1) as u8));
    }
    Payload { bits }
}

fn to_unsigned(v: i32, depth: u16) -> u32 {
    (v as u32) & ((1u32 << depth) - 1)
}

fn from_unsigned(u: u32, depth: u16) -> i32 {
    let shift = 32 - depth as u32;
    ((u << shift) as i32) >> shift
}

fn lsb_bits(cfg: &EmbedConfig, depth: u16) -> Result<usize, EmbedError> {
    cfg.validate()?;
    Ok(LsbSchedule::from_capacity(cfg.capacity_bpb, depth).bits_per_sample)
}

pub fn lsb_replace_embed(cover: &AudioSignal, payload: &Payload, cfg: &EmbedConfig) -> Result<AudioSignal, EmbedError> {
    let depth = cover.bit_depth();
    let k = lsb_bits(cfg, depth)?;
    let capacity = k * cover.len();
    if payload.len() > capacity {
        return Err(EmbedError::PayloadTooLarge {
            bits: payload.len(),
            capacity,
        });
    }
    let mut raw = cover.raw().to_vec();
    for (i, chunk) in payload.bits.chunks(k).enumerate() {
        let mut u = to_unsigned(raw[i], depth);
        for (b, &bit) in chunk.iter().enumerate() {
            u = (u & !(1 << b)) | ((bit as u32 & 1) << b);
        }
        raw[i] = from_unsigned(u, depth);
    }
    Ok(cover.with_raw(raw)?)
}

pub fn lsb_replace_extract(stego: &AudioSignal, n_bits: usize, cfg: &EmbedConfig) -> Result<Payload, EmbedError> {
    let depth = stego.bit_depth();
    let k = lsb_bits(cfg, depth)?;
    let capacity = k * stego.len();
    if n_bits > capacity {
        return Err(EmbedError::PayloadTooLarge { bits: n_bits, capacity });
    }
    let bits = (0..n_bits)
        .map(|j| ((to_unsigned(stego.raw()[j / k], depth) >> (j % k)) & 1) as u8)
        .collect();
    Ok(Payload { bits })
}

fn selection_order(n: usize, key: u64) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed::derive(key, PERMUTATION_STREAM, 0)));
    idx
}

pub fn lsb_match_embed(cover: &AudioSignal, payload: &Payload, cfg: &EmbedConfig) -> Result<AudioSignal, EmbedError> {
    cfg.validate()?;
    if payload.len() > cover.len() {
        return Err(EmbedError::PayloadTooLarge {
            bits: payload.len(),
            capacity: cover.len(),
        });
    }
    let (lo, hi) = int_range(cover.bit_depth());
    let order = selection_order(cover.len(), cfg.seed);
    let mut signs = seed::rng(seed::derive(cfg.seed, SIGN_STREAM, 0));
    let mut raw = cover.raw().to_vec();
    for (&bit, &i) in payload.bits.iter().zip(&order) {
        let v = raw[i];
        if (v & 1) as u8 == bit {
            continue;
        }
        let up = signs.gen::<bool>();
        raw[i] = if v == hi {
            v - 1
        } else if v == lo || up {
            v + 1
        } else {
            v - 1
        };
    }
    Ok(cover.with_raw(raw)?)
}

pub fn lsb_match_extract(stego: &AudioSignal, n_bits: usize, cfg: &EmbedConfig) -> Result<Payload, EmbedError> {
    if n_bits > stego.len() {
        return Err(EmbedError::PayloadTooLarge {
            bits: n_bits,
            capacity: stego.len(),
        });
    }
    let order = selection_order(stego.len(), cfg.seed);
    let bits = order[..n_bits].iter().map(|&i| (stego.raw()[i] & 1) as u8).collect();
    Ok(Payload { bits })
}

/// ±1 chips for `n` samples.
pub fn pn_sequence(n: usize, key: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed::derive(key, CHIP_STREAM, 0));
    let mut chips = Vec::with_capacity(n);
    while chips.len() < n {
        let word = rng.next_u64();
        let take = (n - chips.len()).min(64);
        chips.extend((0..take).map(|i| if (word >> i) & 1 == 1 { 1.0 } else { -1.0 }));
    }
    chips
}

/// Diagnostics of a watermark embedding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WatermarkStats {
    pub alpha: f64,
    /// SNR of the unclipped, unquantized real-valued stego.
    pub pre_clip_snr_db: f64,
    pub clipped: usize,
}

fn dsss_block_len(cover_len: usize, n_bits: usize) -> Result<usize, EmbedError> {
    if n_bits == 0 {
        return Err(EmbedError::PayloadTooLarge { bits: 0, capacity: 0 });
    }
    let block = cover_len / n_bits;
    if block < DSSS_MIN_CHIPS {
        return Err(EmbedError::PayloadTooLarge {
            bits: n_bits,
            capacity: cover_len / DSSS_MIN_CHIPS,
        });
    }
    Ok(block)
}

fn finish(cover: &AudioSignal, marked: &[f64]) -> Result<(AudioSignal, usize), EmbedError> {
    let clipped = marked.iter().filter(|v| v.abs() > 1.0).count();
    let depth = cover.bit_depth();
    let raw = marked.iter().map(|&v| quantize(v.clamp(-1.0, 1.0), depth)).collect();
    if clipped > 0 {
        log::debug!("clipped {clipped} of {} samples", marked.len());
    }
    Ok((cover.with_raw(raw)?, clipped))
}

pub fn dsss_embed_detailed(
    cover: &AudioSignal,
    payload: &Payload,
    cfg: &EmbedConfig,
) -> Result<(AudioSignal, WatermarkStats), EmbedError> {
    cfg.validate()?;
    let n_bits = payload.len();
    let block = dsss_block_len(cover.len(), n_bits)?;
    let used = block * n_bits;
    let chips = pn_sequence(used, cfg.seed);
    let c = cover.samples();
    let alpha = match (cfg.target_snr_db, cfg.strength) {
        (Some(target), _) => {
            let power: f64 = c.iter().map(|v| v * v).sum();
            (power / (10f64.powf(target / 10.0) * used as f64)).sqrt()
        }
        (None, Some(s)) => s,
        (None, None) => return Err(EmbedError::NoTarget),
    };
    let mut marked = c.to_vec();
    for (i, &chip) in chips.iter().enumerate() {
        let b = if payload.bits[i / block] == 1 { 1.0 } else { -1.0 };
        marked[i] += alpha * b * chip;
    }
    let pre_clip_snr_db = snr_db_samples(c, &marked)?;
    let (signal, clipped) = finish(cover, &marked)?;
    if clipped * 1000 > cover.len() {
        log::warn!("dsss clipped {clipped} of {} samples", cover.len());
    }
    Ok((
        signal,
        WatermarkStats {
            alpha,
            pre_clip_snr_db,
            clipped,
        },
    ))
}

pub fn dsss_embed(cover: &AudioSignal, payload: &Payload, cfg: &EmbedConfig) -> Result<AudioSignal, EmbedError> {
    dsss_embed_detailed(cover, payload, cfg).map(|(s, _)| s)
}

/// Per-bit correlation `Σ residual[i] · p[i]` over each chip block.
pub fn dsss_correlate(residual: &[f64], n_bits: usize, key: u64) -> Result<Vec<f64>, EmbedError> {
    let block = dsss_block_len(residual.len(), n_bits)?;
    let chips = pn_sequence(block * n_bits, key);
    Ok(chips
        .chunks(block)
        .zip(residual.chunks(block))
        .map(|(p, r)| p.iter().zip(r).map(|(a, b)| a * b).sum())
        .collect())
}

/// Blind sign-of-correlation decoder.
pub fn dsss_extract(stego: &AudioSignal, n_bits: usize, cfg: &EmbedConfig) -> Result<Payload, EmbedError> {
    let corr = dsss_correlate(stego.samples(), n_bits, cfg.seed)?;
    Ok(Payload {
        bits: corr.iter().map(|&c| u8::from(c > 0.0)).collect(),
    })
}

fn standard_normals(n: usize, key: u64) -> Vec<f64> {
    // Box-Muller over the seeded stream
    let mut rng = seed::rng(seed::derive(key, WATERMARK_STREAM, 0));
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        out.push(r * (2.0 * PI * u2).cos());
        out.push(r * (2.0 * PI * u2).sin());
    }
    out.truncate(n);
    out
}

/// Indices of the `n` largest-magnitude AC coefficients, by decreasing
/// magnitude (ties by index).
pub fn cox_selection(coeffs: &[f64], n: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (1..coeffs.len()).collect();
    idx.sort_by(|&a, &b| coeffs[b].abs().total_cmp(&coeffs[a].abs()).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// Watermark values `x_i`: seeded normals whose sign is set by payload bit
/// `i mod n_bits` (unbiased when the payload is empty).
pub fn cox_watermark(n_coeffs: usize, payload: &Payload, key: u64) -> Vec<f64> {
    let z = standard_normals(n_coeffs, key);
    if payload.is_empty() {
        return z;
    }
    z.iter()
        .enumerate()
        .map(|(i, v)| {
            if payload.bits[i % payload.len()] == 1 {
                v.abs()
            } else {
                -v.abs()
            }
        })
        .collect()
}

pub fn cox_embed_detailed(
    cover: &AudioSignal,
    payload: &Payload,
    strength: f64,
    n_coeffs: usize,
    key: u64,
) -> Result<(AudioSignal, WatermarkStats), EmbedError> {
    if cover.len() < 2 * n_coeffs {
        return Err(EmbedError::SignalTooShort {
            needed: 2 * n_coeffs,
            got: cover.len(),
        });
    }
    if payload.len() > n_coeffs {
        return Err(EmbedError::PayloadTooLarge {
            bits: payload.len(),
            capacity: n_coeffs,
        });
    }
    let mut v = dct2_ortho(cover.samples());
    let chosen = cox_selection(&v, n_coeffs);
    let x = cox_watermark(n_coeffs, payload, key);
    for (&i, xi) in chosen.iter().zip(&x) {
        v[i] *= 1.0 + strength * xi;
    }
    let marked = idct2_ortho(&v);
    let pre_clip_snr_db = snr_db_samples(cover.samples(), &marked)?;
    let (signal, clipped) = finish(cover, &marked)?;
    Ok((
        signal,
        WatermarkStats {
            alpha: strength,
            pre_clip_snr_db,
            clipped,
        },
    ))
}

pub fn cox_embed(cover: &AudioSignal, payload: &Payload, cfg: &EmbedConfig) -> Result<AudioSignal, EmbedError> {
    cfg.validate()?;
    let strength = cfg.strength.unwrap_or(COX_DEFAULT_STRENGTH);
    cox_embed_detailed(cover, payload, strength, COX_COEFFS, cfg.seed).map(|(s, _)| s)
}

/// Informed Cox decoder: needs the cover to recover the relative change of
/// every selected coefficient.
pub fn cox_extract_informed(cover: &AudioSignal, stego: &AudioSignal, n_bits: usize) -> Payload {
    let v = dct2_ortho(cover.samples());
    let w = dct2_ortho(stego.samples());
    let chosen = cox_selection(&v, COX_COEFFS);
    let mut score = vec![0.0; n_bits];
    for (rank, &i) in chosen.iter().enumerate() {
        score[rank % n_bits] += (w[i] - v[i]) / v[i];
    }
    Payload {
        bits: score.iter().map(|&s| u8::from(s > 0.0)).collect(),
    }
}

/// Dispatches to the embedder named by `cfg.algorithm`.
pub fn embed(cover: &AudioSignal, payload: &Payload, cfg: &EmbedConfig) -> Result<AudioSignal, EmbedError> {
    match cfg.algorithm {
        Algorithm::LsbReplace => lsb_replace_embed(cover, payload, cfg),
        Algorithm::LsbMatch => lsb_match_embed(cover, payload, cfg),
        Algorithm::Dsss => dsss_embed(cover, payload, cfg),
        Algorithm::CoxDct => cox_embed(cover, payload, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::{bpb_percent, snr_db};

    fn noise_cover(n: usize, seed: u64, peak: f64) -> AudioSignal {
        let mut rng = crate::seed::rng(seed);
        let x: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / 44100.0;
                0.5 * (2.0 * PI * 440.0 * t).sin() + 0.3 * (2.0 * PI * 1250.0 * t).sin() + 0.2 * rng.gen_range(-1.0..1.0)
            })
            .collect();
        let m = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let x: Vec<f64> = x.iter().map(|v| v / m * peak).collect();
        AudioSignal::from_samples(&x, 44100, 16).unwrap()
    }

    #[test]
    fn payload_is_deterministic_and_balanced() {
        assert!(gen_payload(0, 3).is_empty());
        assert_eq!(gen_payload(1000, 9), gen_payload(1000, 9));
        assert_ne!(gen_payload(1000, 9), gen_payload(1000, 10));
        let p = gen_payload(1_000_000, 42);
        let mean = p.bits.iter().map(|&b| b as f64).sum::<f64>() / 1e6;
        assert!((0.497..=0.503).contains(&mean), "mean {mean}");
    }

    #[test]
    fn lsb_replace_sets_low_bit() {
        let cover = AudioSignal::from_raw(vec![0x1234, 7], 44100, 16).unwrap();
        let cfg = EmbedConfig::lsb_replace(6.25, 0);
        let s = lsb_replace_embed(&cover, &Payload { bits: vec![1] }, &cfg).unwrap();
        assert_eq!(s.raw(), &[0x1235, 7]);
        let same = lsb_replace_embed(&cover, &Payload { bits: vec![] }, &cfg).unwrap();
        assert_eq!(same, cover);
    }

    #[test]
    fn lsb_replace_handles_negative_samples() {
        let cover = AudioSignal::from_raw(vec![-1, -32768, 32767, -2], 44100, 16).unwrap();
        let cfg = EmbedConfig::lsb_replace(25.0, 0);
        let p = gen_payload(16, 5);
        let s = lsb_replace_embed(&cover, &p, &cfg).unwrap();
        assert_eq!(lsb_replace_extract(&s, 16, &cfg).unwrap(), p);
        for (a, b) in cover.raw().iter().zip(s.raw()) {
            assert_eq!(a >> 4, b >> 4, "bits above k-1 must be untouched");
        }
    }

    #[test]
    fn lsb_replace_rejects_oversized_payload() {
        let cover = AudioSignal::from_raw(vec![0; 10], 44100, 16).unwrap();
        let cfg = EmbedConfig::lsb_replace(12.5, 0);
        let r = lsb_replace_embed(&cover, &gen_payload(21, 0), &cfg);
        assert!(matches!(r, Err(EmbedError::PayloadTooLarge { bits: 21, capacity: 20 })));
        assert!(lsb_replace_extract(&cover, 21, &cfg).is_err());
        assert!(lsb_replace_extract(&cover, 0, &cfg).unwrap().is_empty());
    }

    #[test]
    fn extraction_from_cover_reads_its_lsbs() {
        let cover = AudioSignal::from_raw(vec![3, 4, -3, -4], 44100, 16).unwrap();
        let cfg = EmbedConfig::lsb_replace(6.25, 0);
        assert_eq!(lsb_replace_extract(&cover, 4, &cfg).unwrap().bits, vec![1, 0, 1, 0]);
    }

    #[test]
    fn lsb_replace_full_plane_gives_high_snr() {
        let cover = noise_cover(44100, 1, 0.9);
        let cfg = EmbedConfig::lsb_replace(6.25, 0);
        let n = capacity_bits(&cfg, &cover);
        assert_eq!(n, cover.len());
        let s = lsb_replace_embed(&cover, &gen_payload(n, 3), &cfg).unwrap();
        assert_eq!(bpb_percent(n, &cover), 6.25);
        assert!(snr_db(&cover, &s).unwrap() >= 60.0);
    }

    #[test]
    fn lsb_match_rules() {
        let cfg = EmbedConfig::lsb_match(6.25, 0);
        let cover = AudioSignal::from_raw(vec![7], 44100, 16).unwrap();
        let s = lsb_match_embed(&cover, &Payload { bits: vec![1] }, &cfg).unwrap();
        assert_eq!(s.raw(), &[7]);
        let top = AudioSignal::from_raw(vec![32767], 44100, 16).unwrap();
        let s = lsb_match_embed(&top, &Payload { bits: vec![0] }, &cfg).unwrap();
        assert_eq!(s.raw(), &[32766]);
        let bottom = AudioSignal::from_raw(vec![-32768], 44100, 16).unwrap();
        let s = lsb_match_embed(&bottom, &Payload { bits: vec![1] }, &cfg).unwrap();
        assert_eq!(s.raw(), &[-32767]);
    }

    #[test]
    fn lsb_match_modifies_half_of_selected_samples() {
        let cover = noise_cover(200_000, 2, 0.9);
        let cfg = EmbedConfig::lsb_match(6.25, 17);
        let p = gen_payload(150_000, 4);
        let s = lsb_match_embed(&cover, &p, &cfg).unwrap();
        let changed = cover.raw().iter().zip(s.raw()).filter(|(a, b)| a != b).count();
        let frac = changed as f64 / p.len() as f64;
        assert!((frac - 0.5).abs() <= 0.01, "fraction {frac}");
        assert!(cover.raw().iter().zip(s.raw()).all(|(a, b)| (a - b).abs() <= 1));
        assert_eq!(lsb_match_extract(&s, p.len(), &cfg).unwrap(), p);
    }

    #[test]
    fn ladder_maps_to_schedules() {
        let cases = [
            (25.0, 4, 1),
            (12.5, 2, 1),
            (6.25, 1, 1),
            (3.125, 1, 2),
            (1.56, 1, 4),
            (0.78, 1, 8),
        ];
        for (bpb, k, stride) in cases {
            let s = LsbSchedule::from_capacity(bpb, 16);
            assert_eq!((s.bits_per_sample, s.stride), (k, stride), "bpb {bpb}");
        }
    }

    #[test]
    fn dsss_hits_target_and_decodes() {
        let cover = noise_cover(44100, 3, 0.9);
        let cfg = EmbedConfig::dsss(DSSS_DEFAULT_TARGET_SNR_DB, 21);
        let p = gen_payload(capacity_bits(&cfg, &cover), 8);
        let (s, stats) = dsss_embed_detailed(&cover, &p, &cfg).unwrap();
        assert!((stats.pre_clip_snr_db - 27.7).abs() <= 0.1);
        assert!(stats.clipped * 1000 < cover.len());
        let residual: Vec<f64> = s.samples().iter().zip(cover.samples()).map(|(a, b)| a - b).collect();
        let corr = dsss_correlate(&residual, p.len(), cfg.seed).unwrap();
        for (c, &b) in corr.iter().zip(&p.bits) {
            assert_eq!(*c > 0.0, b == 1);
        }
    }

    #[test]
    fn dsss_errors() {
        let cover = noise_cover(1000, 3, 0.9);
        let cfg = EmbedConfig::dsss(27.7, 0);
        assert!(matches!(dsss_embed(&cover, &Payload { bits: vec![] }, &cfg), Err(EmbedError::PayloadTooLarge { .. })));
        assert!(matches!(dsss_embed(&cover, &gen_payload(16, 0), &cfg), Err(EmbedError::PayloadTooLarge { .. })));
        let none = EmbedConfig {
            target_snr_db: None,
            ..cfg
        };
        assert!(matches!(dsss_embed(&cover, &gen_payload(2, 0), &none), Err(EmbedError::NoTarget)));
        let fixed = EmbedConfig {
            target_snr_db: None,
            strength: Some(0.01),
            ..cfg
        };
        let (_, stats) = dsss_embed_detailed(&cover, &gen_payload(2, 0), &fixed).unwrap();
        assert_eq!(stats.alpha, 0.01);
    }

    #[test]
    fn cox_zero_strength_is_identity() {
        let cover = noise_cover(8000, 4, 0.9);
        let (s, _) = cox_embed_detailed(&cover, &gen_payload(8, 1), 0.0, COX_COEFFS, 5).unwrap();
        assert!(cover.raw().iter().zip(s.raw()).all(|(a, b)| (a - b).abs() <= 1));
    }

    #[test]
    fn cox_never_touches_dc() {
        let mut x = noise_cover(4000, 5, 0.5).samples().to_vec();
        x.iter_mut().for_each(|v| *v += 0.3);
        let cover = AudioSignal::from_samples(&x, 44100, 16).unwrap();
        let v = dct2_ortho(cover.samples());
        assert!(!cox_selection(&v, COX_COEFFS).contains(&0));
        let (s, _) = cox_embed_detailed(&cover, &gen_payload(8, 1), 0.3, COX_COEFFS, 5).unwrap();
        let w = dct2_ortho(s.samples());
        // only quantization and clipping can move DC
        assert!((w[0] - v[0]).abs() < 1e-3 * v[0].abs());
    }

    #[test]
    fn cox_snr_well_below_lsb_and_decodes() {
        let cover = noise_cover(44100, 6, 0.9);
        let cfg = EmbedConfig::cox(0.1, 12);
        let p = gen_payload(COX_PAYLOAD_BITS, 2);
        let s = cox_embed(&cover, &p, &cfg).unwrap();
        let snr = snr_db(&cover, &s).unwrap();
        assert!((10.0..35.0).contains(&snr), "snr {snr}");
        assert_eq!(cox_extract_informed(&cover, &s, p.len()), p);
        let short = noise_cover(1999, 6, 0.9);
        assert!(matches!(cox_embed(&short, &p, &cfg), Err(EmbedError::SignalTooShort { .. })));
    }

    #[test]
    fn embedders_are_deterministic_and_preserve_shape() {
        let cover = noise_cover(20_000, 7, 0.9);
        for cfg in [
            EmbedConfig::lsb_replace(25.0, 1),
            EmbedConfig::lsb_match(3.125, 1),
            EmbedConfig::dsss(27.7, 1),
            EmbedConfig::cox(0.1, 1),
        ] {
            let p = gen_payload(capacity_bits(&cfg, &cover), 99);
            let a = embed(&cover, &p, &cfg).unwrap();
            let b = embed(&cover, &p, &cfg).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.len(), cover.len());
            assert_eq!(a.sample_rate(), cover.sample_rate());
            assert_eq!(a.bit_depth(), cover.bit_depth());
        }
    }

    #[test]
    fn config_json_has_exact_fields() {
        let cfg = EmbedConfig::lsb_replace(6.25, 7);
        let json = serde_json::to_value(cfg).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["algorithm", "capacity_bpb", "seed", "strength", "target_snr_db"]);
        assert_eq!(json["algorithm"], "lsb-replace");
        let back: EmbedConfig = serde_json::from_value(json).unwrap();
        assert_eq!(back, cfg);
        assert!(serde_json::from_str::<EmbedConfig>(r#"{"algorithm":"dsss","capacity_bpb":0,"strength":null,"target_snr_db":27.7,"seed":1,"extra":1}"#).is_err());
    }

    #[test]
    fn invalid_capacity_rejected() {
        let cover = AudioSignal::from_raw(vec![0; 8], 44100, 16).unwrap();
        for bad in [0.0, -1.0, 101.0] {
            let cfg = EmbedConfig::lsb_replace(bad, 0);
            assert!(matches!(lsb_replace_embed(&cover, &gen_payload(1, 0), &cfg), Err(EmbedError::InvalidConfig(_))));
        }
    }
}
