//! PCM audio carrier, WAV I/O and the sample-domain preprocessing steps
//! (peak normalization, second difference, framing) plus SNR/BPB accounting.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

/// Frame length used by the cepstral front end.
pub const FRAME_LEN: usize = 1024;
/// Hop between consecutive frames (50% overlap).
pub const HOP_LEN: usize = 512;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("not a RIFF/WAVE file")]
    NotWav,
    #[error("unsupported WAV format: {0}")]
    UnsupportedFormat(String),
    #[error("truncated WAV file: {0}")]
    TruncatedFile(String),
    #[error("I/O failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("sequence too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    RateMismatch(u32, u32),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
}

/// Mono PCM signal. `raw` holds the signed integer samples verbatim and
/// `samples` is `raw / 2^(bit_depth - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    raw: Vec<i32>,
    sample_rate: u32,
    bit_depth: u16,
}

impl AudioSignal {
    /// Builds a signal from signed integer PCM values.
    pub fn from_raw(raw: Vec<i32>, sample_rate: u32, bit_depth: u16) -> Result<Self, AudioError> {
        if bit_depth != 8 && bit_depth != 16 {
            return Err(AudioError::InvalidSignal(format!(
                "bit depth {bit_depth} (expected 8 or 16)"
            )));
        }
        if sample_rate == 0 {
            return Err(AudioError::InvalidSignal("sample rate must be positive".into()));
        }
        let (lo, hi) = int_range(bit_depth);
        if let Some(v) = raw.iter().find(|&&v| v < lo || v > hi) {
            return Err(AudioError::InvalidSignal(format!(
                "raw value {v} outside {bit_depth}-bit range"
            )));
        }
        let scale = full_scale(bit_depth);
        let samples = raw.iter().map(|&v| v as f64 / scale).collect();
        Ok(Self {
            samples,
            raw,
            sample_rate,
            bit_depth,
        })
    }

    /// Quantizes real amplitudes to `bit_depth` integers (round to nearest,
    /// clamp to the integer range).
    pub fn from_samples(samples: &[f64], sample_rate: u32, bit_depth: u16) -> Result<Self, AudioError> {
        if bit_depth != 8 && bit_depth != 16 {
            return Err(AudioError::InvalidSignal(format!(
                "bit depth {bit_depth} (expected 8 or 16)"
            )));
        }
        let raw = samples.iter().map(|&s| quantize(s, bit_depth)).collect();
        Self::from_raw(raw, sample_rate, bit_depth)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn raw(&self) -> &[i32] {
        &self.raw
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn bit_depth(&self) -> u16 {
        self.bit_depth
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Same rate and depth, new integer samples.
    pub fn with_raw(&self, raw: Vec<i32>) -> Result<Self, AudioError> {
        Self::from_raw(raw, self.sample_rate, self.bit_depth)
    }
}

/// `2^(bit_depth - 1)`.
pub fn full_scale(bit_depth: u16) -> f64 {
    (1i64 << (bit_depth - 1)) as f64
}

/// Inclusive signed integer range for a bit depth.
pub fn int_range(bit_depth: u16) -> (i32, i32) {
    let half = 1i32 << (bit_depth - 1);
    (-half, half - 1)
}

/// Round-to-nearest quantization with clamping; never wraps.
pub fn quantize(sample: f64, bit_depth: u16) -> i32 {
    let (lo, hi) = int_range(bit_depth);
    let v = (sample * full_scale(bit_depth)).round();
    if v.is_nan() {
        0
    } else {
        v.clamp(lo as f64, hi as f64) as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub values: Vec<f64>,
    pub start_index: usize,
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Parses a mono 8/16-bit PCM RIFF/WAVE byte buffer.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioSignal, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::NotWav);
    }
    let mut pos = 12;
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    loop {
        if pos + 8 > bytes.len() {
            return Err(AudioError::TruncatedFile(if fmt.is_none() {
                "missing fmt chunk".into()
            } else {
                "missing data chunk".into()
            }));
        }
        let id = &bytes[pos..pos + 4];
        let size = le_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + 16 > bytes.len() {
                    return Err(AudioError::TruncatedFile("fmt chunk".into()));
                }
                let tag = le_u16(bytes, body);
                let channels = le_u16(bytes, body + 2);
                let rate = le_u32(bytes, body + 4);
                let bits = le_u16(bytes, body + 14);
                fmt = Some((tag, channels, rate, bits));
            }
            b"data" => {
                let (tag, channels, rate, bits) = fmt.ok_or_else(|| {
                    AudioError::UnsupportedFormat("data chunk before fmt chunk".into())
                })?;
                if tag != 1 {
                    return Err(AudioError::UnsupportedFormat(format!("format tag {tag} (PCM only)")));
                }
                if channels != 1 {
                    return Err(AudioError::UnsupportedFormat(format!("{channels} channels (mono only)")));
                }
                if bits != 8 && bits != 16 {
                    return Err(AudioError::UnsupportedFormat(format!("{bits}-bit samples")));
                }
                if body + size > bytes.len() {
                    return Err(AudioError::TruncatedFile(format!(
                        "data chunk declares {size} bytes, {} present",
                        bytes.len() - body
                    )));
                }
                let data = &bytes[body..body + size];
                let raw: Vec<i32> = if bits == 8 {
                    data.iter().map(|&b| b as i32 - 128).collect()
                } else {
                    if !size.is_multiple_of(2) {
                        return Err(AudioError::TruncatedFile("odd byte count in 16-bit data".into()));
                    }
                    data.chunks_exact(2)
                        .map(|c| i16::from_le_bytes([c[0], c[1]]) as i32)
                        .collect()
                };
                return AudioSignal::from_raw(raw, rate, bits);
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body + size + (size & 1);
    }
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal, AudioError> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes)
}

/// Canonical 44-byte-header encoding.
pub fn encode_wav(signal: &AudioSignal) -> Vec<u8> {
    let bytes_per_sample = (signal.bit_depth / 8) as u32;
    let data_len = signal.len() as u32 * bytes_per_sample;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&signal.sample_rate.to_le_bytes());
    out.extend_from_slice(&(signal.sample_rate * bytes_per_sample).to_le_bytes());
    out.extend_from_slice(&(bytes_per_sample as u16).to_le_bytes());
    out.extend_from_slice(&signal.bit_depth.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    if signal.bit_depth == 8 {
        out.extend(signal.raw.iter().map(|&v| (v + 128) as u8));
    } else {
        for &v in &signal.raw {
            out.extend_from_slice(&(v as i16).to_le_bytes());
        }
    }
    out
}

pub fn write_wav(signal: &AudioSignal, path: impl AsRef<Path>) -> Result<(), AudioError> {
    let mut file = fs::File::create(path)?;
    file.write_all(&encode_wav(signal))?;
    Ok(())
}

/// Central second difference `x[n+2] - 2 x[n+1] + x[n]`, length `len - 2`.
pub fn second_derivative(x: &[f64]) -> Result<Vec<f64>, AudioError> {
    if x.len() < 3 {
        return Err(AudioError::TooShort { needed: 3, got: x.len() });
    }
    Ok(x.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect())
}

/// Divides by the peak magnitude; an all-zero input is returned unchanged.
pub fn peak_normalize(x: &[f64]) -> Vec<f64> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        x.to_vec()
    } else {
        x.iter().map(|v| v / peak).collect()
    }
}

/// Number of full frames; trailing remainder is dropped.
pub fn frame_count(len: usize, frame_len: usize, hop: usize) -> usize {
    if len < frame_len {
        0
    } else {
        (len - frame_len) / hop + 1
    }
}

pub fn frame_signal(x: &[f64], frame_len: usize, hop: usize) -> Vec<Frame> {
    assert!(frame_len > 0 && hop > 0 && hop <= frame_len, "invalid framing parameters");
    (0..frame_count(x.len(), frame_len, hop))
        .map(|i| {
            let start = i * hop;
            Frame {
                values: x[start..start + frame_len].to_vec(),
                start_index: start,
            }
        })
        .collect()
}

/// SNR of `stego` against `cover` on real-valued samples; `+inf` when equal.
pub fn snr_db_samples(cover: &[f64], stego: &[f64]) -> Result<f64, AudioError> {
    if cover.len() != stego.len() {
        return Err(AudioError::LengthMismatch(cover.len(), stego.len()));
    }
    let signal: f64 = cover.iter().map(|c| c * c).sum();
    let noise: f64 = cover.iter().zip(stego).map(|(c, s)| (c - s) * (c - s)).sum();
    if noise == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / noise).log10())
}

pub fn snr_db(cover: &AudioSignal, stego: &AudioSignal) -> Result<f64, AudioError> {
    if cover.sample_rate != stego.sample_rate {
        return Err(AudioError::RateMismatch(cover.sample_rate, stego.sample_rate));
    }
    snr_db_samples(&cover.samples, &stego.samples)
}

/// Payload size as a percentage of cover bits.
pub fn bpb_percent(payload_bits: usize, cover: &AudioSignal) -> f64 {
    let cover_bits = cover.len() as f64 * cover.bit_depth as f64;
    if cover_bits == 0.0 {
        return 0.0;
    }
    100.0 * payload_bits as f64 / cover_bits
}
