use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

const DEGENERATE_RANGE: f64 = 1e-12;

/// Per-column min/max learned on a fit set, reusable on held-out rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxParams {
    pub fn fit(matrix: &FeatureMatrix, fit_rows: &[usize]) -> Result<Self> {
        if matrix.is_empty() || matrix.n_cols() == 0 {
            return Err(Error::Precondition("min-max scaling of an empty matrix".into()));
        }
        if fit_rows.is_empty() {
            return Err(Error::Precondition("min-max fit set is empty".into()));
        }
        let p = matrix.n_cols();
        let mut min = vec![f64::INFINITY; p];
        let mut max = vec![f64::NEG_INFINITY; p];
        for &r in fit_rows {
            let row = matrix.rows.get(r).ok_or_else(|| {
                Error::Precondition(format!("fit row {r} out of range ({} rows)", matrix.len()))
            })?;
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Precondition(format!(
                        "non-finite value in column {}",
                        matrix.columns[j]
                    )));
                }
                min[j] = min[j].min(v);
                max[j] = max[j].max(v);
            }
        }
        Ok(Self { min, max })
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| {
                let range = hi - lo;
                if range < DEGENERATE_RANGE {
                    0.0
                } else {
                    (x - lo) / range
                }
            })
            .collect()
    }

    pub fn transform(&self, matrix: &FeatureMatrix) -> FeatureMatrix {
        let mut out = matrix.clone();
        for row in &mut out.rows {
            *row = self.transform_row(row);
        }
        out
    }
}

/// Scales every column to `(x - min) / (max - min)` with min/max taken over `fit_rows`.
pub fn minmax_scale_columns(
    matrix: &FeatureMatrix,
    fit_rows: &[usize],
) -> Result<(FeatureMatrix, MinMaxParams)> {
    let params = MinMaxParams::fit(matrix, fit_rows)?;
    Ok((params.transform(matrix), params))
}
