use serde::{Deserialize, Serialize};

/// Per-dimension affine map of the training range onto `[-1, 1]`.
/// Constant dimensions map to 0; test values outside the range extrapolate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut iter = rows.into_iter();
        let first = iter.next().expect("scaler needs at least one row");
        let mut min = first.to_vec();
        let mut max = first.to_vec();
        for row in iter {
            for (j, &v) in row.iter().enumerate() {
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Self { min, max }
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    2.0 * (v - lo) / (hi - lo) - 1.0
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Fits on `train` and returns the scaler with the scaled rows.
pub fn scale_features(train: &[Vec<f64>]) -> (MinMaxScaler, Vec<Vec<f64>>) {
    let scaler = MinMaxScaler::fit(train.iter().map(Vec::as_slice));
    let scaled = train.iter().map(|r| scaler.transform(r)).collect();
    (scaler, scaled)
}
