//! Seeded desk-scale covers: 2 to 5 sinusoids plus low-pass filtered noise,
//! peak-normalized to 0.9, over a white noise floor at a random level, then
//! quantized to 16 bits.
//!
//! The low-pass is a cascade of four one-pole sections so the top of the band
//! is left to the noise floor, as in a real recording. The floor level varies
//! per cover across the range where low-bit embedding noise sits, so the
//! absolute high-band energy of a cover says little about whether it carries
//! a payload.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::audio::{peak_normalize, AudioSignal};
use crate::seed;

pub const SYNTH_PEAK: f64 = 0.9;
pub const SYNTH_BIT_DEPTH: u16 = 16;
/// Range of the white noise floor RMS, in dB relative to full scale.
pub const SYNTH_FLOOR_DBFS: (f64, f64) = (-120.0, -80.0);
const LOWPASS_POLES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub count: usize,
    pub duration_s: f64,
    pub sample_rate: u32,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(count: usize, duration_s: f64, seed: u64) -> Self {
        Self {
            count,
            duration_s,
            sample_rate: 44_100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.count == 0 {
            return Err(EvalError::Format("synthetic corpus needs at least one cover".into()));
        }
        if !(1.0..=10.0).contains(&self.duration_s) {
            return Err(EvalError::Format(format!("duration {} s outside [1, 10]", self.duration_s)));
        }
        if self.sample_rate < 8_000 {
            return Err(EvalError::Format(format!("sample rate {} too low", self.sample_rate)));
        }
        Ok(())
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Cover number `index` of `spec`.
pub fn synth_cover(spec: &SynthSpec, index: usize) -> Result<AudioSignal, EvalError> {
    spec.validate()?;
    let fs = f64::from(spec.sample_rate);
    let n = (spec.duration_s * fs).round() as usize;
    let mut rng = seed::rng(seed::derive(spec.seed, seed::stream::SYNTH, index as u64));

    let tones: Vec<(f64, f64, f64)> = (0..rng.gen_range(2..=5))
        .map(|_| {
            let f = 80.0 * (rng.gen::<f64>() * (5000.0f64 / 80.0).ln()).exp();
            (f, rng.gen_range(0.2..1.0), rng.gen_range(0.0..2.0 * PI))
        })
        .collect();
    let tone_rms = (tones.iter().map(|t| t.1 * t.1 / 2.0).sum::<f64>()).sqrt();
    let cutoff = rng.gen_range(300.0..3000.0);
    let pole = (-2.0 * PI * cutoff / fs).exp();
    let noise_rel = rng.gen_range(0.05..0.5);
    let floor_rms = 10f64.powf(rng.gen_range(SYNTH_FLOOR_DBFS.0..SYNTH_FLOOR_DBFS.1) / 20.0);

    let mut state = [0.0; LOWPASS_POLES];
    let mut noise: Vec<f64> = (0..n)
        .map(|_| {
            let mut v = gaussian(&mut rng);
            for s in state.iter_mut() {
                *s = pole * *s + (1.0 - pole) * v;
                v = *s;
            }
            v
        })
        .collect();
    let noise_rms = (noise.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    if noise_rms > 0.0 {
        noise.iter_mut().for_each(|v| *v *= noise_rel * tone_rms / noise_rms);
    }
    let x: Vec<f64> = noise
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let t = i as f64 / fs;
            tones.iter().map(|&(f, a, ph)| a * (2.0 * PI * f * t + ph).sin()).sum::<f64>() + w
        })
        .collect();
    let x: Vec<f64> = peak_normalize(&x)
        .iter()
        .map(|v| SYNTH_PEAK * v + floor_rms * gaussian(&mut rng))
        .collect();
    Ok(AudioSignal::from_samples(&x, spec.sample_rate, SYNTH_BIT_DEPTH)?)
}
