//! Per-feature standardization fit on training data.

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::Result;

/// Per-feature location/scale transform: `x -> (x - mean) / scale`.
///
/// `scale` is the population standard deviation of the fitting data.
/// Zero-variance features keep scale 1 and are flagged so callers can tell
/// a genuinely constant column from a standardized one. Conventions:
/// population (divide-by-n) moments, matching the rest of the crate.
#[derive(Debug, Clone)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
    zero_variance: Vec<bool>,
}

impl Standardizer {
    /// Fit means and scales on (complete) training data.
    pub fn fit(train: &DataMatrix) -> Standardizer {
        let n = train.n_rows() as f64;
        let p = train.n_features();
        let mut mean = vec![0.0; p];
        let mut scale = vec![1.0; p];
        let mut zero_variance = vec![false; p];
        for j in 0..p {
            let col = train.values().column(j);
            let m = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
            mean[j] = m;
            if var > 0.0 {
                scale[j] = var.sqrt();
            } else {
                zero_variance[j] = true;
            }
        }
        Standardizer {
            mean,
            scale,
            zero_variance,
        }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    /// Features whose fitting column was constant; these pass through
    /// both transforms unchanged.
    pub fn zero_variance_flags(&self) -> &[bool] {
        &self.zero_variance
    }

    /// Apply the fitted transform. Constant columns pass through unchanged.
    pub fn transform(&self, data: &DataMatrix) -> Result<DataMatrix> {
        self.check_width(data)?;
        let values = DMatrix::from_fn(data.n_rows(), data.n_features(), |i, j| {
            if self.zero_variance[j] {
                data.values()[(i, j)]
            } else {
                (data.values()[(i, j)] - self.mean[j]) / self.scale[j]
            }
        });
        Ok(data.with_values(values))
    }

    /// Invert the fitted transform.
    pub fn inverse_transform(&self, data: &DataMatrix) -> Result<DataMatrix> {
        self.check_width(data)?;
        let values = DMatrix::from_fn(data.n_rows(), data.n_features(), |i, j| {
            if self.zero_variance[j] {
                data.values()[(i, j)]
            } else {
                data.values()[(i, j)] * self.scale[j] + self.mean[j]
            }
        });
        Ok(data.with_values(values))
    }

    fn check_width(&self, data: &DataMatrix) -> Result<()> {
        if data.n_features() != self.mean.len() {
            return Err(crate::error::Error::ShapeMismatch {
                expected: format!("{} features", self.mean.len()),
                got: format!("{}", data.n_features()),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use nalgebra::DVector;

    fn dataset(values: DMatrix<f64>) -> DataMatrix {
        let n = values.nrows();
        let names = (0..values.ncols()).map(|i| format!("f{i}")).collect();
        DataMatrix::new(values, DVector::zeros(n), names, Task::Regression).unwrap()
    }

    #[test]
    fn two_point_column_standardizes_symmetrically() {
        let d = dataset(DMatrix::from_column_slice(2, 1, &[2.0, 4.0]));
        let s = Standardizer::fit(&d);
        let t = s.transform(&d).unwrap();
        assert!((t.values()[(0, 0)] + 1.0).abs() < 1e-12);
        assert!((t.values()[(1, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_column_is_flagged_and_untouched() {
        let d = dataset(DMatrix::from_column_slice(3, 1, &[5.0, 5.0, 5.0]));
        let s = Standardizer::fit(&d);
        assert!(s.zero_variance_flags()[0]);
        assert_eq!(s.scale()[0], 1.0);
        let t = s.transform(&d).unwrap();
        assert_eq!(t.values()[(1, 0)], 5.0);
    }

    #[test]
    fn fitted_data_has_zero_mean_unit_sd() {
        let mut rng = crate::rng::StreamRng::new(5);
        let d = dataset(DMatrix::from_fn(50, 3, |_, j| {
            rng.standard_normal() * (j as f64 + 1.0) + j as f64
        }));
        let s = Standardizer::fit(&d);
        let t = s.transform(&d).unwrap();
        for j in 0..3 {
            let col = t.values().column(j);
            let m = col.iter().sum::<f64>() / 50.0;
            let var = col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 50.0;
            assert!(m.abs() < 1e-10);
            assert!((var.sqrt() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn roundtrip_is_identity_to_1e12() {
        let mut rng = crate::rng::StreamRng::new(9);
        let d = dataset(DMatrix::from_fn(20, 4, |_, _| rng.standard_normal() * 3.0 + 1.0));
        let s = Standardizer::fit(&d);
        let back = s.inverse_transform(&s.transform(&d).unwrap()).unwrap();
        for (a, b) in d.values().iter().zip(back.values().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
