use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::column_name;
use crate::error::{Error, Result};

/// Per-column mean and population standard deviation of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn fit_normalization(dataset: ArrayView2<f64>) -> Result<NormalizationParams> {
    if dataset.nrows() < 2 {
        return Err(Error::Normalization(format!(
            "need at least 2 rows, got {}",
            dataset.nrows()
        )));
    }
    let dims = dataset.ncols();
    let mean: Array1<f64> = dataset.mean_axis(Axis(0)).expect("non-empty");
    let std = dataset.std_axis(Axis(0), 0.0);
    for (i, &s) in std.iter().enumerate() {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Normalization(format!(
                "{} is constant or non-finite; cannot scale it",
                column_name(i, dims)
            )));
        }
    }
    Ok(NormalizationParams {
        mean: mean.to_vec(),
        std: std.to_vec(),
    })
}

impl NormalizationParams {
    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    fn check(&self, data: ArrayView2<f64>) -> Result<()> {
        if data.ncols() != self.dims() {
            return Err(Error::Shape {
                expected: self.dims(),
                got: data.ncols(),
            });
        }
        Ok(())
    }

    /// `(x - mean) / std` per column.
    pub fn apply(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(data)?;
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }

    /// `z * std + mean` per column.
    pub fn invert(&self, data: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check(data)?;
        let mut out = data.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        Ok(out)
    }
}
