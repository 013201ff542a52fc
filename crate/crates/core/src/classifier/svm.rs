//! Soft-margin C-SVM with an RBF kernel, trained on the dual
//!
//! ```text
//! min ½ αᵀQα − eᵀα   s.t.  yᵀα = 0,  0 ≤ α_i ≤ C,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! by pairwise (SMO) updates with second-order working-set selection, as in
//! LIBSVM. Training stops when the maximal KKT violation drops below `eps`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scaler::MinMaxScaler;
use super::SvmError;
use crate::calibration::{FeatureKind, FeatureVector, Label};
use crate::embed::EmbedConfig;

pub const KKT_TOLERANCE: f64 = 1e-3;
pub const MAX_PAIR_UPDATES: usize = 1_000_000;
pub const MODEL_VERSION: &str = "calsteg-svm/1";

const TAU: f64 = 1e-12;

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64, SvmError> {
    if a.len() != b.len() {
        return Err(SvmError::DimMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(rbf(a, b, gamma))
}

#[inline]
fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub fn kernel_matrix(x: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        k[i][i] = 1.0;
        for j in 0..i {
            let v = rbf(&x[i], &x[j], gamma);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

/// Raw dual solution on a fixed kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    /// Unsigned multipliers `α_i ∈ [0, C]`.
    pub alpha: Vec<f64>,
    /// Offset `b` of `f(x) = Σ α_i y_i K(x_i, x) + b`.
    pub bias: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the dual for labels `y ∈ {-1, +1}` on a precomputed kernel.
pub fn solve_dual(kernel: &[Vec<f64>], y: &[f64], c_reg: f64, eps: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * kernel[i][j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let upper = |a: f64| a >= c_reg;
    let lower = |a: f64| a <= 0.0;
    let in_up = |t: usize, a: f64| (y[t] > 0.0 && !upper(a)) || (y[t] < 0.0 && !lower(a));
    let in_low = |t: usize, a: f64| (y[t] > 0.0 && !lower(a)) || (y[t] < 0.0 && !upper(a));

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(t, alpha[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    i_sel = Some(t);
                }
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        let mut gmin = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            if !in_low(t, alpha[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            let b = gmax - v;
            if b > 0.0 {
                let a = kernel[i][i] + kernel[t][t] - 2.0 * kernel[i][t];
                let a = if a > 0.0 { a } else { TAU };
                let score = -(b * b) / a;
                if score < best {
                    best = score;
                    j_sel = Some(t);
                }
            }
        }
        let j = match j_sel {
            Some(j) if gmax - gmin >= eps => j,
            _ => {
                converged = true;
                break;
            }
        };
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = {
            let a = kernel[i][i] + kernel[j][j] - 2.0 * kernel[i][j];
            if a > 0.0 {
                a
            } else {
                TAU
            }
        };
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c_reg {
                    alpha[i] = c_reg;
                    alpha[j] = c_reg - diff;
                }
            } else if alpha[j] > c_reg {
                alpha[j] = c_reg;
                alpha[i] = c_reg + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c_reg {
                if alpha[i] > c_reg {
                    alpha[i] = c_reg;
                    alpha[j] = sum - c_reg;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c_reg {
                if alpha[j] > c_reg {
                    alpha[j] = c_reg;
                    alpha[i] = sum - c_reg;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // offset from the free multipliers, or the midpoint of the feasible range
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 {
        free_sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    let objective = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() / 2.0;
    DualSolution {
        alpha,
        bias: -rho,
        objective,
        iterations,
        converged,
    }
}

/// `½ αᵀQα − Σα` evaluated directly.
pub fn dual_objective(kernel: &[Vec<f64>], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel[i][j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub version: String,
    /// Scaled, masked support vectors.
    pub support_vectors: Vec<Vec<f64>>,
    /// Signed coefficients `α_i y_i`.
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c_reg: f64,
    /// Dimensions used, over the unscaled input.
    pub feature_mask: Vec<bool>,
    /// Fitted on the full training dimension before masking.
    pub scaler: MinMaxScaler,
    pub converged: bool,
    pub feature_kind: Option<FeatureKind>,
    pub calibration: Option<EmbedConfig>,
}

pub(crate) fn label_sign(label: Label) -> Result<f64, SvmError> {
    match label {
        Label::Cover => Ok(-1.0),
        Label::Stego => Ok(1.0),
        Label::Unknown => Err(SvmError::Unlabeled),
    }
}

fn apply_mask(x: &[f64], mask: &[bool]) -> Vec<f64> {
    x.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect()
}

/// Trains on all dimensions.
pub fn train_svm(data: &[FeatureVector], c_reg: f64, gamma: f64) -> Result<SvmModel, SvmError> {
    let dim = data.first().map_or(0, |f| f.values.len());
    train_svm_masked(data, &vec![true; dim], c_reg, gamma)
}

pub fn train_svm_masked(data: &[FeatureVector], mask: &[bool], c_reg: f64, gamma: f64) -> Result<SvmModel, SvmError> {
    if !(c_reg > 0.0) || !(gamma > 0.0) {
        return Err(SvmError::BadHyperparameters { c_reg, gamma });
    }
    let y = data.iter().map(|f| label_sign(f.label)).collect::<Result<Vec<_>, _>>()?;
    if !(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0)) {
        return Err(SvmError::SingleClass);
    }
    let dim = mask.len();
    if let Some(bad) = data.iter().find(|f| f.values.len() != dim) {
        return Err(SvmError::DimMismatch {
            expected: dim,
            got: bad.values.len(),
        });
    }
    let scaler = MinMaxScaler::fit(data.iter().map(|f| f.values.as_slice()));
    let x: Vec<Vec<f64>> = data
        .iter()
        .map(|f| apply_mask(&scaler.transform(&f.values), mask))
        .collect();
    let kernel = kernel_matrix(&x, gamma);
    let sol = solve_dual(&kernel, &y, c_reg, KKT_TOLERANCE, MAX_PAIR_UPDATES);
    if !sol.converged {
        log::warn!("SMO stopped at the iteration cap without meeting the KKT tolerance");
    }
    let (mut support_vectors, mut alphas) = (Vec::new(), Vec::new());
    for ((xi, &yi), &ai) in x.into_iter().zip(&y).zip(&sol.alpha) {
        if ai > 0.0 {
            support_vectors.push(xi);
            alphas.push(ai * yi);
        }
    }
    Ok(SvmModel {
        version: MODEL_VERSION.to_string(),
        support_vectors,
        alphas,
        bias: sol.bias,
        gamma,
        c_reg,
        feature_mask: mask.to_vec(),
        scaler,
        converged: sol.converged,
        feature_kind: data.first().map(|f| f.kind),
        calibration: data.first().and_then(|f| f.embedder_used_for_calibration),
    })
}

impl SvmModel {
    pub fn input_dim(&self) -> usize {
        self.feature_mask.len()
    }

    /// Errors with `NoConvergence` when training hit the iteration cap.
    pub fn ensure_converged(&self) -> Result<&Self, SvmError> {
        if self.converged {
            Ok(self)
        } else {
            Err(SvmError::NoConvergence)
        }
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64, SvmError> {
        if x.len() != self.input_dim() {
            return Err(SvmError::DimMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let xs = apply_mask(&self.scaler.transform(x), &self.feature_mask);
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * rbf(sv, &xs, self.gamma))
            .sum::<f64>()
            + self.bias)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SvmError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SvmError> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("version").and_then(|v| v.as_str()).unwrap_or("<missing>");
        if version != MODEL_VERSION {
            return Err(SvmError::VersionMismatch {
                expected: MODEL_VERSION.to_string(),
                found: version.to_string(),
            });
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SvmError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// `(label, decision_value)`; zero decisions are classified as cover.
pub fn predict(model: &SvmModel, x: &FeatureVector) -> Result<(Label, f64), SvmError> {
    if let (Some(kind), true) = (model.feature_kind, x.values.len() == model.input_dim()) {
        if kind != x.kind {
            return Err(SvmError::KindMismatch {
                model: kind,
                input: x.kind,
            });
        }
    }
    let d = model.decision_value(&x.values)?;
    Ok((if d > 0.0 { Label::Stego } else { Label::Cover }, d))
}
