//! Reversed-Mel cepstral features.
//!
//! The R-Mel warping `1127 ln(1 + (fs/2 - f)/700)` mirrors the Mel scale
//! about Nyquist, so the filterbank is dense at high frequencies and sparse at
//! low ones. Per frame: Hamming window, power spectrum, triangular R-Mel
//! filterbank, `ln(e + 1e-10)`, orthonormal DCT-II, keep coefficients 1..=29.

use std::f64::consts::PI;
use std::fmt;
use std::io;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{self, AudioSignal, Frame, FRAME_LEN, HOP_LEN};
use crate::dct::dct2_matrix;

/// Number of cepstral coefficients kept per frame.
pub const N_COEFFS: usize = 29;
/// Default filter count (coefficient 0 is dropped, leaving 29).
pub const N_FILTERS: usize = 30;
/// Floor added to filter energies before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

const RMEL_GAIN: f64 = 1127.0;
const RMEL_KNEE_HZ: f64 = 700.0;
const DEGENERATE_VARIANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("value {value} outside [0, {max}]")]
    OutOfBand { value: f64, max: f64 },
    #[error("bad filterbank config: {0}")]
    BadConfig(String),
    #[error("frame of {frame} samples does not match filterbank size {n_fft}")]
    BankMismatch { frame: usize, n_fft: usize },
    #[error("signal too short: {0} samples yields no frame")]
    SignalTooShort(usize),
    #[error("need at least 2 frames for statistics, got {0}")]
    TooFewFrames(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn rmel_of_hz(f: f64, fs: f64) -> Result<f64, FeatureError> {
    let nyquist = 0.5 * fs;
    if !(0.0..=nyquist).contains(&f) {
        return Err(FeatureError::OutOfBand { value: f, max: nyquist });
    }
    Ok(RMEL_GAIN * (1.0 + (nyquist - f) / RMEL_KNEE_HZ).ln())
}

pub fn hz_of_rmel(r: f64, fs: f64) -> Result<f64, FeatureError> {
    let top = RMEL_GAIN * (1.0 + 0.5 * fs / RMEL_KNEE_HZ).ln();
    if !(0.0..=top).contains(&r) {
        return Err(FeatureError::OutOfBand { value: r, max: top });
    }
    Ok(0.5 * fs - RMEL_KNEE_HZ * ((r / RMEL_GAIN).exp() - 1.0))
}

/// Triangular filters equally spaced on the R-Mel axis, plus the window, FFT
/// plan and DCT basis needed to turn a frame into cepstral coefficients.
/// Immutable once built.
#[derive(Clone)]
pub struct RMelFilterbank {
    pub sample_rate: f64,
    pub n_fft: usize,
    pub n_filters: usize,
    /// Filter centers in Hz, ascending.
    pub centers_hz: Vec<f64>,
    /// `n_filters + 2` boundary frequencies in Hz, ascending.
    pub edges_hz: Vec<f64>,
    /// `n_filters` rows of `n_fft / 2 + 1` weights.
    pub weights: Vec<Vec<f64>>,
    window: Vec<f64>,
    dct: Vec<Vec<f64>>,
    fft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for RMelFilterbank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RMelFilterbank")
            .field("sample_rate", &self.sample_rate)
            .field("n_fft", &self.n_fft)
            .field("n_filters", &self.n_filters)
            .field("centers_hz", &self.centers_hz)
            .finish_non_exhaustive()
    }
}

fn triangle(f: f64, lo: f64, center: f64, hi: f64) -> f64 {
    if f <= lo || f >= hi {
        0.0
    } else if f <= center {
        (f - lo) / (center - lo)
    } else {
        (hi - f) / (hi - center)
    }
}

pub fn build_filterbank(fs: f64, n_fft: usize, n_filters: usize) -> Result<RMelFilterbank, FeatureError> {
    if n_filters < 2 {
        return Err(FeatureError::BadConfig(format!("n_filters {n_filters} < 2")));
    }
    if n_fft < 2 || !n_fft.is_power_of_two() {
        return Err(FeatureError::BadConfig(format!("n_fft {n_fft} is not a power of two")));
    }
    if !(fs > 0.0) {
        return Err(FeatureError::BadConfig(format!("sample rate {fs}")));
    }
    let nyquist = 0.5 * fs;
    let top = rmel_of_hz(0.0, fs)?;
    let step = top / (n_filters + 1) as f64;
    let mut edges_hz = (0..n_filters + 2)
        .map(|j| hz_of_rmel((j as f64 * step).min(top), fs).map(|h| h.clamp(0.0, nyquist)))
        .collect::<Result<Vec<_>, _>>()?;
    edges_hz.reverse();
    edges_hz[0] = 0.0;
    edges_hz[n_filters + 1] = nyquist;

    let n_bins = n_fft / 2 + 1;
    let bin_hz = fs / n_fft as f64;
    let weights = (0..n_filters)
        .map(|m| {
            let (lo, c, hi) = (edges_hz[m], edges_hz[m + 1], edges_hz[m + 2]);
            (0..n_bins).map(|k| triangle(k as f64 * bin_hz, lo, c, hi)).collect()
        })
        .collect();
    let window = (0..n_fft)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (n_fft - 1) as f64).cos())
        .collect();
    Ok(RMelFilterbank {
        sample_rate: fs,
        n_fft,
        n_filters,
        centers_hz: edges_hz[1..=n_filters].to_vec(),
        edges_hz,
        weights,
        window,
        dct: dct2_matrix(n_filters),
        fft: FftPlanner::new().plan_fft_forward(n_fft),
    })
}

impl RMelFilterbank {
    /// The bank used throughout: 30 filters over a 1024-point FFT.
    pub fn standard(sample_rate: u32) -> Result<Self, FeatureError> {
        build_filterbank(sample_rate as f64, FRAME_LEN, N_FILTERS)
    }

    /// Filter energies of the Hamming-windowed power spectrum.
    pub fn filter_energies(&self, frame: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if frame.len() != self.n_fft {
            return Err(FeatureError::BankMismatch {
                frame: frame.len(),
                n_fft: self.n_fft,
            });
        }
        let mut buf: Vec<Complex64> = frame
            .iter()
            .zip(&self.window)
            .map(|(x, w)| Complex64::new(x * w, 0.0))
            .collect();
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..self.n_fft / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        Ok(self
            .weights
            .iter()
            .map(|row| row.iter().zip(&power).map(|(w, p)| w * p).sum())
            .collect())
    }

    fn cepstrum(&self, frame: &[f64]) -> Result<[f64; N_COEFFS], FeatureError> {
        if self.n_filters <= N_COEFFS {
            return Err(FeatureError::BadConfig(format!(
                "{} filters cannot yield {N_COEFFS} coefficients above index 0",
                self.n_filters
            )));
        }
        let log_e: Vec<f64> = self
            .filter_energies(frame)?
            .into_iter()
            .map(|e| (e + LOG_FLOOR).ln())
            .collect();
        let mut out = [0.0; N_COEFFS];
        for (k, c) in out.iter_mut().enumerate() {
            *c = self.dct[k + 1].iter().zip(&log_e).map(|(b, v)| b * v).sum();
        }
        Ok(out)
    }
}

/// Cepstral coefficients 1..=29 of one frame.
pub fn rmfcc_frame(frame: &Frame, bank: &RMelFilterbank) -> Result<[f64; N_COEFFS], FeatureError> {
    bank.cepstrum(&frame.values)
}

/// One row of 29 coefficients per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmfccMatrix {
    pub values: Vec<[f64; N_COEFFS]>,
    pub source_id: String,
}

impl RmfccMatrix {
    pub fn n_frames(&self) -> usize {
        self.values.len()
    }

    /// Elementwise `self - other`; both must share the frame grid.
    pub fn difference(&self, other: &RmfccMatrix) -> Result<RmfccMatrix, FeatureError> {
        if self.n_frames() != other.n_frames() {
            return Err(FeatureError::BadConfig(format!(
                "frame grids differ: {} vs {}",
                self.n_frames(),
                other.n_frames()
            )));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| std::array::from_fn(|j| a[j] - b[j]))
            .collect();
        Ok(RmfccMatrix {
            values,
            source_id: self.source_id.clone(),
        })
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), FeatureError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["frame".to_string()];
        header.extend((1..=N_COEFFS).map(|j| format!("c{j}")));
        out.write_record(&header)?;
        for (i, row) in self.values.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Normalize, differentiate twice, frame, and extract coefficients per frame.
pub fn rmfcc_signal(x: &AudioSignal, bank: &RMelFilterbank) -> Result<RmfccMatrix, FeatureError> {
    rmfcc_samples(x.samples(), bank, "")
}

pub fn rmfcc_samples(x: &[f64], bank: &RMelFilterbank, source_id: &str) -> Result<RmfccMatrix, FeatureError> {
    let normalized = audio::peak_normalize(x);
    let d2 = audio::second_derivative(&normalized).map_err(|_| FeatureError::SignalTooShort(x.len()))?;
    let frames = audio::frame_signal(&d2, bank.n_fft, HOP_LEN.min(bank.n_fft));
    if frames.is_empty() {
        return Err(FeatureError::SignalTooShort(x.len()));
    }
    let values = frames
        .iter()
        .map(|f| bank.cepstrum(&f.values))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RmfccMatrix {
        values,
        source_id: source_id.to_string(),
    })
}

/// Per-coefficient mean, standard deviation, skewness and (non-excess)
/// kurtosis, using population moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HosStats {
    pub mean: [f64; N_COEFFS],
    pub std: [f64; N_COEFFS],
    pub skewness: [f64; N_COEFFS],
    pub kurtosis: [f64; N_COEFFS],
}

impl HosStats {
    /// `mean ++ std ++ skewness ++ kurtosis`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(4 * N_COEFFS);
        v.extend_from_slice(&self.mean);
        v.extend_from_slice(&self.std);
        v.extend_from_slice(&self.skewness);
        v.extend_from_slice(&self.kurtosis);
        v
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<(), FeatureError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["statistic".to_string()];
        header.extend((1..=N_COEFFS).map(|j| format!("c{j}")));
        out.write_record(&header)?;
        for (name, row) in [
            ("mean", &self.mean),
            ("std", &self.std),
            ("skewness", &self.skewness),
            ("kurtosis", &self.kurtosis),
        ] {
            let mut rec = vec![name.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

pub fn hos_stats(m: &RmfccMatrix) -> Result<HosStats, FeatureError> {
    let n = m.n_frames();
    if n < 2 {
        return Err(FeatureError::TooFewFrames(n));
    }
    let nf = n as f64;
    let mut stats = HosStats {
        mean: [0.0; N_COEFFS],
        std: [0.0; N_COEFFS],
        skewness: [0.0; N_COEFFS],
        kurtosis: [0.0; N_COEFFS],
    };
    for j in 0..N_COEFFS {
        let mu = m.values.iter().map(|r| r[j]).sum::<f64>() / nf;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for r in &m.values {
            let d = r[j] - mu;
            let d2 = d * d;
            m2 += d2;
            m3 += d2 * d;
            m4 += d2 * d2;
        }
        m2 /= nf;
        m3 /= nf;
        m4 /= nf;
        stats.mean[j] = mu;
        stats.std[j] = m2.sqrt();
        if m2 >= DEGENERATE_VARIANCE {
            stats.skewness[j] = m3 / m2.powf(1.5);
            stats.kurtosis[j] = m4 / (m2 * m2);
        }
    }
    Ok(stats)
}
