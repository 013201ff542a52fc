//! Orthonormal DCT-II and its inverse (DCT-III), computed through a single
//! complex FFT of the same length (Makhoul's even/odd reordering).

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

fn ortho_scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

pub fn dct2_ortho(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n.div_ceil(2) {
        v[i].re = x[2 * i];
    }
    for i in 0..n / 2 {
        v[n - 1 - i].re = x[2 * i + 1];
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut v);
    (0..n)
        .map(|k| {
            let w = Complex64::from_polar(1.0, -PI * k as f64 / (2.0 * n as f64));
            (v[k] * w).re * ortho_scale(k, n)
        })
        .collect()
}

/// Inverse of [`dct2_ortho`].
pub fn idct2_ortho(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    let c: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, &v)| v / ortho_scale(k, n))
        .collect();
    let mut v: Vec<Complex64> = (0..n)
        .map(|k| {
            let mirrored = if k == 0 { 0.0 } else { c[n - k] };
            let w = Complex64::from_polar(1.0, PI * k as f64 / (2.0 * n as f64));
            Complex64::new(c[k], -mirrored) * w
        })
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut v);
    let inv_n = 1.0 / n as f64;
    let mut x = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        x[2 * i] = v[i].re * inv_n;
    }
    for i in 0..n / 2 {
        x[2 * i + 1] = v[n - 1 - i].re * inv_n;
    }
    x
}

/// Direct O(n²) orthonormal DCT-II basis, row `k` = coefficient `k`.
pub fn dct2_matrix(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            (0..n)
                .map(|i| ortho_scale(k, n) * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * n as f64)).cos())
                .collect()
        })
        .collect()
}
