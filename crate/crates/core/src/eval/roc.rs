use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::calibration::Label;

/// ROC with stego as the positive class. `thresholds[i]` is the smallest
/// decision value flagged as stego at `points[i]`; the origin has none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<(f64, f64)>,
    pub thresholds: Vec<Option<f64>>,
    pub auc: f64,
}

impl RocCurve {
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<(), EvalError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["false_positive_rate", "true_positive_rate", "threshold"])?;
        for (&(fpr, tpr), t) in self.points.iter().zip(&self.thresholds) {
            let t = t.map(|v| format!("{v:?}")).unwrap_or_default();
            out.write_record([format!("{fpr:?}"), format!("{tpr:?}"), t])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Sweeps the threshold down through the sorted unique decision values. Tied
/// scores move the curve diagonally, so a tie contributes half credit.
pub fn roc_and_auc(scores: &[(f64, Label)]) -> Result<RocCurve, EvalError> {
    let pos = scores.iter().filter(|s| s.1 == Label::Stego).count();
    let neg = scores.iter().filter(|s| s.1 == Label::Cover).count();
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    if scores.iter().any(|s| s.1 == Label::Unknown || !s.0.is_finite()) {
        return Err(EvalError::Format("ROC scores need finite values and known labels".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![None];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut area = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].0;
        let (tp0, fp0) = (tp, fp);
        while i < sorted.len() && sorted[i].0 == t {
            match sorted[i].1 {
                Label::Stego => tp += 1,
                _ => fp += 1,
            }
            i += 1;
        }
        // trapezoid in integer units, normalized once at the end
        area += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(Some(t));
    }
    Ok(RocCurve {
        points,
        thresholds,
        auc: area / (pos as f64 * neg as f64),
    })
}
