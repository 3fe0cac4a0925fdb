//! Per-feature z-score standardization.

use serde::{Deserialize, Serialize};

use crate::bag::Dataset;
use crate::error::{MilError, Result};

/// Per-feature mean and standard deviation fitted on training instances.
///
/// Features that are constant on the training data get a standard deviation
/// of 1, so they map to 0 and stay inert.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    mean: Vec<f64>,
    std: Vec<f64>,
}

impl FeatureScaler {
    /// Fits on the given instances using the population standard deviation.
    pub fn fit<'a>(instances: impl IntoIterator<Item = &'a [f64]>) -> Result<Self> {
        let rows: Vec<&[f64]> = instances.into_iter().collect();
        if rows.len() < 2 {
            return Err(MilError::InvalidParameter(format!(
                "scaler needs at least 2 instances, got {}",
                rows.len()
            )));
        }
        let dim = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in &rows {
            if row.len() != dim {
                return Err(MilError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in &rows {
            for ((s, v), m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .into_iter()
            .zip(mean.iter())
            .map(|(s, m)| {
                let sd = (s / n).sqrt();
                if sd > f64::EPSILON * m.abs().max(1.0) {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Ok(FeatureScaler { mean, std })
    }

    pub fn from_parts(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != std.len() {
            return Err(MilError::DimensionMismatch {
                expected: mean.len(),
                found: std.len(),
            });
        }
        if std.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || mean.iter().any(|m| !m.is_finite()) {
            return Err(MilError::InvalidParameter(
                "scaler needs finite means and positive standard deviations".into(),
            ));
        }
        Ok(FeatureScaler { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn std(&self) -> &[f64] {
        &self.std
    }

    pub fn transform_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.extend(
            x.iter()
                .zip(self.mean.iter().zip(self.std.iter()))
                .map(|(v, (m, s))| (v - m) / s),
        );
    }

    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        self.transform_into(x, &mut out);
        out
    }

    pub fn apply(&self, dataset: &Dataset) -> Result<Dataset> {
        if dataset.dim() != self.dim() {
            return Err(MilError::DimensionMismatch {
                expected: self.dim(),
                found: dataset.dim(),
            });
        }
        dataset.map_instances(self.dim(), |x, out| self.transform_into(x, out))
    }
}

/// Fits a scaler on every instance of `train`.
pub fn fit_scaler(train: &Dataset) -> Result<FeatureScaler> {
    FeatureScaler::fit(train.all_instances())
}

pub fn apply_scaler(dataset: &Dataset, scaler: &FeatureScaler) -> Result<Dataset> {
    scaler.apply(dataset)
}
