use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::svm::{predict, train_svm_masked};
use super::SvmError;
use crate::calibration::{FeatureVector, Label};
use crate::seed;

/// `C ∈ {2^-1, 2^1, …, 2^9}`.
pub fn default_c_grid() -> Vec<f64> {
    (-1..=9).step_by(2).map(|e| 2f64.powi(e)).collect()
}

/// `γ ∈ {2^-9, 2^-7, …, 2^1}`.
pub fn default_gamma_grid() -> Vec<f64> {
    (-9..=1).step_by(2).map(|e| 2f64.powi(e)).collect()
}

/// Fold index per sample. Samples sharing a non-empty `source_id` stay in the
/// same fold; groups are shuffled within their class composition and dealt
/// round-robin, which stratifies both paired and unpaired data.
pub fn stratified_folds(data: &[FeatureVector], k: usize, seed: u64) -> Vec<usize> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    let mut singles = Vec::new();
    for (i, f) in data.iter().enumerate() {
        if f.source_id.is_empty() {
            singles.push(vec![i]);
        } else {
            groups.entry(f.source_id.as_str()).or_default().push(i);
        }
    }
    let mut buckets: BTreeMap<(usize, usize), Vec<Vec<usize>>> = BTreeMap::new();
    for members in groups.into_values().chain(singles) {
        let stego = members.iter().filter(|&&i| data[i].label == Label::Stego).count();
        buckets.entry((members.len() - stego, stego)).or_default().push(members);
    }
    let mut rng = seed::rng(seed);
    let mut fold = vec![0; data.len()];
    let mut next = 0;
    for mut bucket in buckets.into_values() {
        bucket.shuffle(&mut rng);
        for members in bucket {
            for i in members {
                fold[i] = next % k;
            }
            next += 1;
        }
    }
    fold
}

/// Mean k-fold accuracy of an SVM restricted to `mask`.
pub fn cross_val_accuracy(
    data: &[FeatureVector],
    mask: &[bool],
    c_reg: f64,
    gamma: f64,
    folds: usize,
    seed: u64,
) -> Result<f64, SvmError> {
    let assignment = stratified_folds(data, folds, seed);
    let mut total = 0.0;
    let mut used = 0;
    for f in 0..folds {
        let train: Vec<FeatureVector> = data.iter().zip(&assignment).filter(|(_, &a)| a != f).map(|(d, _)| d.clone()).collect();
        let test: Vec<&FeatureVector> = data.iter().zip(&assignment).filter(|(_, &a)| a == f).map(|(d, _)| d).collect();
        if test.is_empty() {
            continue;
        }
        let model = train_svm_masked(&train, mask, c_reg, gamma)?;
        let mut correct = 0;
        for t in &test {
            if predict(&model, t)?.0 == t.label {
                correct += 1;
            }
        }
        total += correct as f64 / test.len() as f64;
        used += 1;
    }
    Ok(if used == 0 { 0.0 } else { total / used as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridResult {
    pub c_reg: f64,
    pub gamma: f64,
    pub accuracy: f64,
}

/// Best `(C, γ)` by mean cross-validated accuracy; ties go to the smaller C,
/// then the smaller γ.
pub fn grid_search(
    data: &[FeatureVector],
    c_grid: &[f64],
    gamma_grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<GridResult, SvmError> {
    if folds < 2 {
        return Err(SvmError::BadConfig(format!("folds {folds} < 2")));
    }
    if c_grid.is_empty() || gamma_grid.is_empty() {
        return Err(SvmError::BadConfig("empty hyperparameter grid".into()));
    }
    let has = |l| data.iter().any(|d| d.label == l);
    if !(has(Label::Cover) && has(Label::Stego)) {
        return Err(SvmError::SingleClass);
    }
    let dim = data[0].values.len();
    let mask = vec![true; dim];
    let mut cs = c_grid.to_vec();
    let mut gs = gamma_grid.to_vec();
    cs.sort_by(f64::total_cmp);
    gs.sort_by(f64::total_cmp);
    let cells: Vec<(f64, f64)> = cs.iter().flat_map(|&c| gs.iter().map(move |&g| (c, g))).collect();
    let scores = cells
        .par_iter()
        .map(|&(c, g)| cross_val_accuracy(data, &mask, c, g, folds, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = GridResult {
        c_reg: cells[0].0,
        gamma: cells[0].1,
        accuracy: scores[0],
    };
    for (&(c, g), &acc) in cells.iter().zip(&scores).skip(1) {
        if acc > best.accuracy {
            best = GridResult {
                c_reg: c,
                gamma: g,
                accuracy: acc,
            };
        }
    }
    Ok(best)
}
