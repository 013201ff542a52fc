//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use calsteg::classifier::dual_objective;
use calsteg::Label;
use nalgebra::{DMatrix, DVector};

/// Minimum of `½αᵀQα − Σα` subject to `0 ≤ α ≤ C`, `yᵀα = 0`, found by trying
/// every split of the indices into lower-bound, upper-bound and free sets.
pub fn brute_force_objective(k: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[i][j]);
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut c_ = code;
        for s in state.iter_mut() {
            *s = (c_ % 3) as u8;
            c_ /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha = vec![0.0; n];
        for i in 0..n {
            if state[i] == 1 {
                alpha[i] = c;
            }
        }
        if !free.is_empty() {
            // [Q_FF y_F; y_Fᵀ 0] [α_F; b] = [1 − Q_FB α_B; −y_Bᵀ α_B]
            let m = free.len();
            let mut a = DMatrix::zeros(m + 1, m + 1);
            let mut rhs = DVector::zeros(m + 1);
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[(r, s)] = q[(i, j)];
                }
                a[(r, m)] = y[i];
                a[(m, r)] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|&j| state[j] == 1).map(|j| q[(i, j)] * c).sum::<f64>();
            }
            rhs[m] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(sol) = a.lu().solve(&rhs) else { continue };
            if free.iter().enumerate().any(|(r, _)| sol[r] < -1e-9 || sol[r] > c + 1e-9) {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r].clamp(0.0, c);
            }
        }
        let balance: f64 = alpha.iter().zip(y).map(|(a, y)| a * y).sum();
        if balance.abs() > 1e-7 {
            continue;
        }
        best = best.min(dual_objective(k, y, &alpha));
    }
    best
}

/// `U / (n_pos · n_neg)` by counting every stego-cover pair; ties count half.
pub fn mann_whitney_auc(scores: &[(f64, Label)]) -> f64 {
    let pos: Vec<f64> = scores.iter().filter(|s| s.1 == Label::Stego).map(|s| s.0).collect();
    let neg: Vec<f64> = scores.iter().filter(|s| s.1 == Label::Cover).map(|s| s.0).collect();
    let mut u = 0.0;
    for &p in &pos {
        for &n in &neg {
            u += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    u / (pos.len() * neg.len()) as f64
}

/// Population mean, std, skewness and non-excess kurtosis of one column,
/// straight from the moment definitions.
pub fn naive_moments(x: &[f64]) -> [f64; 4] {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let (m2, m3, m4) = (m(2), m(3), m(4));
    if m2 < 1e-12 {
        return [mean, m2.sqrt(), 0.0, 0.0];
    }
    [mean, m2.sqrt(), m3 / m2.powf(1.5), m4 / (m2 * m2)]
}
