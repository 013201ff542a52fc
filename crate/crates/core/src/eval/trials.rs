use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::roc::{roc_and_auc, RocCurve};
use super::EvalError;
use crate::calibration::{feature_names, FeatureKind, FeatureVector, Label};
use crate::classifier::{ga_select, grid_search, predict, train_svm, GaConfig};
use crate::embed::EmbedConfig;
use crate::seed;

pub const REPORT_VERSION: &str = "calsteg-report/1";
pub const DEFAULT_REPETITIONS: usize = 20;
pub const DEFAULT_TRAIN_FRAC: f64 = 0.7;

/// Sample indices of a `(train, test)` partition. Samples sharing a non-empty
/// `source_id` land on the same side; each class-composition bucket of groups
/// is split at `round(frac · len)`, clamped so both sides get one group when
/// the bucket has two.
pub fn split_indices(data: &[FeatureVector], train_frac: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(train_frac > 0.0 && train_frac < 1.0) {
        return Err(EvalError::Format(format!("train fraction {train_frac} outside (0, 1)")));
    }
    let has = |l| data.iter().any(|d| d.label == l);
    if !(has(Label::Cover) && has(Label::Stego)) {
        return Err(EvalError::SingleClass);
    }
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
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut bucket in buckets.into_values() {
        bucket.shuffle(&mut rng);
        let n = bucket.len();
        let mut k = (train_frac * n as f64).round() as usize;
        if n >= 2 {
            k = k.clamp(1, n - 1);
        }
        for (j, members) in bucket.into_iter().enumerate() {
            if j < k { &mut train } else { &mut test }.extend(members);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Seeded 70/30-style split keeping pairs together.
pub fn split_train_test(
    data: &[FeatureVector],
    train_frac: f64,
    seed: u64,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>), EvalError> {
    let (tr, te) = split_indices(data, train_frac, seed)?;
    Ok((tr.iter().map(|&i| data[i].clone()).collect(), te.iter().map(|&i| data[i].clone()).collect()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// One repetition; stego is the positive class and rates are percentages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub trial_seed: u64,
    pub c_reg: f64,
    pub gamma: f64,
    pub auc: f64,
}

impl TrialResult {
    pub fn from_confusion(confusion: Confusion, trial_seed: u64, c_reg: f64, gamma: f64, auc: f64) -> Self {
        let Confusion { tp, fp, tn, fn_ } = confusion;
        Self {
            sensitivity: 100.0 * tp as f64 / (tp + fn_) as f64,
            specificity: 100.0 * tn as f64 / (tn + fp) as f64,
            accuracy: 100.0 * (tp + tn) as f64 / confusion.total() as f64,
            confusion,
            trial_seed,
            c_reg,
            gamma,
            auc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Hyper {
    Fixed { c_reg: f64, gamma: f64 },
    /// Grid search on each training split.
    Grid { c_grid: Vec<f64>, gamma_grid: Vec<f64>, folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub repetitions: usize,
    pub train_frac: f64,
    pub hyper: Hyper,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(hyper: Hyper, seed: u64) -> Self {
        Self {
            repetitions: DEFAULT_REPETITIONS,
            train_frac: DEFAULT_TRAIN_FRAC,
            hyper,
            seed,
        }
    }

    /// Split seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        seed::derive(self.seed, seed::stream::SPLIT, t as u64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub version: String,
    pub feature_kind: FeatureKind,
    pub embedder: Option<EmbedConfig>,
    pub manifest: Option<String>,
    pub config: EvalConfig,
    pub trials: Vec<TrialResult>,
    pub mean_sensitivity: f64,
    pub std_sensitivity: f64,
    pub mean_specificity: f64,
    pub std_specificity: f64,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_auc: f64,
    /// Built from the decision values of every trial's test set.
    pub roc: RocCurve,
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String, EvalError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let probe: serde_json::Value = serde_json::from_str(text)?;
        let found = probe.get("version").and_then(|v| v.as_str()).unwrap_or_default();
        if found != REPORT_VERSION {
            return Err(EvalError::VersionMismatch {
                expected: REPORT_VERSION.into(),
                found: found.into(),
            });
        }
        Ok(serde_json::from_value(probe)?)
    }

    /// Writes `report.json` and `roc.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), EvalError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()? + "\n")?;
        self.roc.write_csv(std::fs::File::create(dir.join("roc.csv"))?)
    }
}

/// `(mean, sample std)`; the std of a single value is 0.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn single_kind(data: &[FeatureVector]) -> Result<FeatureKind, EvalError> {
    let kind = data.first().ok_or(EvalError::SingleClass)?.kind;
    if data.iter().any(|d| d.kind != kind) {
        return Err(EvalError::Format("features mix plain and calibrated kinds".into()));
    }
    if data.iter().any(|d| d.label == Label::Unknown) {
        return Err(EvalError::Format("evaluation needs labelled features".into()));
    }
    Ok(kind)
}

fn run_trial(data: &[FeatureVector], cfg: &EvalConfig, t: usize) -> Result<(TrialResult, Vec<(f64, Label)>), EvalError> {
    let trial_seed = cfg.trial_seed(t);
    let (train, test) = split_train_test(data, cfg.train_frac, trial_seed)?;
    let (c_reg, gamma) = match &cfg.hyper {
        Hyper::Fixed { c_reg, gamma } => (*c_reg, *gamma),
        Hyper::Grid {
            c_grid,
            gamma_grid,
            folds,
        } => {
            let best = grid_search(&train, c_grid, gamma_grid, *folds, seed::derive(trial_seed, seed::stream::FOLDS, 0))?;
            (best.c_reg, best.gamma)
        }
    };
    let model = train_svm(&train, c_reg, gamma)?;
    if !model.converged {
        log::warn!("trial {t}: SVM stopped at the iteration cap");
    }
    let mut confusion = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    let mut scores = Vec::with_capacity(test.len());
    for fv in &test {
        let (pred, d) = predict(&model, fv)?;
        match (fv.label, pred) {
            (Label::Stego, Label::Stego) => confusion.tp += 1,
            (Label::Stego, _) => confusion.fn_ += 1,
            (_, Label::Stego) => confusion.fp += 1,
            _ => confusion.tn += 1,
        }
        scores.push((d, fv.label));
    }
    let auc = roc_and_auc(&scores)?.auc;
    Ok((TrialResult::from_confusion(confusion, trial_seed, c_reg, gamma, auc), scores))
}

/// Repeated split → train → test. Trials run in parallel; results keep
/// trial order.
pub fn run_trials(data: &[FeatureVector], cfg: &EvalConfig) -> Result<EvalReport, EvalError> {
    if cfg.repetitions == 0 {
        return Err(EvalError::Format("repetitions must be at least 1".into()));
    }
    let kind = single_kind(data)?;
    let outcomes = (0..cfg.repetitions)
        .into_par_iter()
        .map(|t| run_trial(data, cfg, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut trials = Vec::with_capacity(outcomes.len());
    let mut pooled = Vec::new();
    for (trial, scores) in outcomes {
        trials.push(trial);
        pooled.extend(scores);
    }
    let stat = |f: fn(&TrialResult) -> f64| mean_std(&trials.iter().map(f).collect::<Vec<_>>());
    let (mean_sensitivity, std_sensitivity) = stat(|t| t.sensitivity);
    let (mean_specificity, std_specificity) = stat(|t| t.specificity);
    let (mean_accuracy, std_accuracy) = stat(|t| t.accuracy);
    let (mean_auc, _) = stat(|t| t.auc);
    Ok(EvalReport {
        version: REPORT_VERSION.into(),
        feature_kind: kind,
        embedder: data[0].embedder_used_for_calibration,
        manifest: None,
        config: cfg.clone(),
        mean_sensitivity,
        std_sensitivity,
        mean_specificity,
        std_specificity,
        mean_accuracy,
        std_accuracy,
        mean_auc,
        roc: roc_and_auc(&pooled)?,
        trials,
    })
}

/// Welch two-sample t-statistic of stego against cover for each dimension.
pub fn welch_t(data: &[FeatureVector]) -> Vec<f64> {
    let dim = data.first().map_or(0, |d| d.values.len());
    (0..dim)
        .map(|j| {
            let col = |l: Label| data.iter().filter(|d| d.label == l).map(|d| d.values[j]).collect::<Vec<_>>();
            let (s, c) = (col(Label::Stego), col(Label::Cover));
            if s.len() < 2 || c.len() < 2 {
                return 0.0;
            }
            let ((ms, ss), (mc, sc)) = (mean_std(&s), mean_std(&c));
            let se = (ss * ss / s.len() as f64 + sc * sc / c.len() as f64).sqrt();
            let diff = ms - mc;
            if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            }
        })
        .collect()
}

/// How the three scatter dimensions are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum ScatterSelection {
    TStatistic,
    /// Rank by |t| among the GA-selected dimensions first.
    Genetic(GaConfig),
}

/// Three feature columns plus the label, for 3-D scatter plots.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterData {
    pub dims: [usize; 3],
    pub columns: [String; 3],
    pub rows: Vec<([f64; 3], Label)>,
}

impl ScatterData {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), EvalError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(self.columns.iter().map(String::as_str).chain(["label"]))?;
        for (v, l) in &self.rows {
            out.write_record(v.iter().map(|x| format!("{x:?}")).chain([l.as_str().to_owned()]))?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn scatter_data(data: &[FeatureVector], selection: &ScatterSelection) -> Result<ScatterData, EvalError> {
    let t = welch_t(data);
    if t.len() < 3 {
        return Err(EvalError::Format("scatter export needs at least 3 feature dimensions".into()));
    }
    let preferred = match selection {
        ScatterSelection::TStatistic => vec![true; t.len()],
        ScatterSelection::Genetic(cfg) => ga_select(data, cfg)?,
    };
    let mut order: Vec<usize> = (0..t.len()).collect();
    order.sort_by(|&a, &b| preferred[b].cmp(&preferred[a]).then(t[b].abs().total_cmp(&t[a].abs())).then(a.cmp(&b)));
    let dims = [order[0], order[1], order[2]];
    let names = if t.len() == crate::calibration::N_FEATURES {
        feature_names()
    } else {
        (0..t.len()).map(|j| format!("f{j}")).collect()
    };
    Ok(ScatterData {
        dims,
        columns: dims.map(|j| names[j].clone()),
        rows: data.iter().map(|d| (dims.map(|j| d.values[j]), d.label)).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub plain: EvalReport,
    pub calibrated: EvalReport,
    /// `AUC(calibrated) − AUC(plain)` on the pooled ROC curves.
    pub auc_delta: f64,
    pub plain_scatter: ScatterData,
    pub calibrated_scatter: ScatterData,
}

/// Evaluates both feature kinds of the same signals with the same
/// configuration, so both runs see identical partitions.
pub fn compare_feature_kinds(
    plain: &[FeatureVector],
    calibrated: &[FeatureVector],
    cfg: &EvalConfig,
    selection: &ScatterSelection,
) -> Result<Comparison, EvalError> {
    if plain.len() != calibrated.len()
        || plain.iter().zip(calibrated).any(|(p, c)| p.source_id != c.source_id || p.label != c.label)
    {
        return Err(EvalError::Format("plain and calibrated feature sets do not describe the same signals".into()));
    }
    if single_kind(plain)? != FeatureKind::Plain || single_kind(calibrated)? != FeatureKind::Calibrated {
        return Err(EvalError::Format("expected one plain and one calibrated feature set".into()));
    }
    let p = run_trials(plain, cfg)?;
    let c = run_trials(calibrated, cfg)?;
    Ok(Comparison {
        auc_delta: c.roc.auc - p.roc.auc,
        plain_scatter: scatter_data(plain, selection)?,
        calibrated_scatter: scatter_data(calibrated, selection)?,
        plain: p,
        calibrated: c,
    })
}
