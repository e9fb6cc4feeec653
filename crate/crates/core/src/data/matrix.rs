//! Complete numeric feature table plus target column.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Downstream prediction task of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

/// A complete n x p feature matrix with a length-n target vector.
///
/// Invariants enforced at construction: every value is finite (no missing
/// entries — missingness is simulated downstream), feature names are
/// distinct, and classification targets are integer class codes in
/// `[0, n_classes)`.
#[derive(Debug, Clone)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    target: DVector<f64>,
    feature_names: Vec<String>,
    task: Task,
}

impl DataMatrix {
    pub fn new(
        values: DMatrix<f64>,
        target: DVector<f64>,
        feature_names: Vec<String>,
        task: Task,
    ) -> Result<Self> {
        if values.nrows() != target.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} target entries", values.nrows()),
                got: format!("{}", target.len()),
            });
        }
        if feature_names.len() != values.ncols() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} feature names", values.ncols()),
                got: format!("{}", feature_names.len()),
            });
        }
        for (i, name) in feature_names.iter().enumerate() {
            if feature_names[..i].iter().any(|n| n == name) {
                return Err(Error::DuplicateFeatureName(name.clone()));
            }
        }
        for (idx, v) in values.iter().enumerate() {
            if !v.is_finite() {
                let row = idx % values.nrows();
                let col = idx / values.nrows();
                return Err(Error::BadCell {
                    row: row + 1,
                    column: feature_names[col].clone(),
                    message: "non-finite value".into(),
                });
            }
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidClassTarget("non-finite target value".into()));
        }
        if task == Task::Classification {
            for v in target.iter() {
                if v.fract() != 0.0 || *v < 0.0 {
                    return Err(Error::InvalidClassTarget(format!(
                        "target value {v} is not a non-negative integer"
                    )));
                }
            }
        }
        Ok(DataMatrix {
            values,
            target,
            feature_names,
            task,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn target(&self) -> &DVector<f64> {
        &self.target
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Number of classes for classification targets (`max code + 1`).
    pub fn n_classes(&self) -> usize {
        match self.task {
            Task::Regression => 0,
            Task::Classification => self.target.iter().fold(0.0_f64, |m, v| m.max(*v)) as usize + 1,
        }
    }

    /// Copy of row `i` as a plain vector.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// New matrix restricted to the given row indices (order preserved).
    pub fn select_rows(&self, rows: &[usize]) -> DataMatrix {
        let p = self.n_features();
        let values = DMatrix::from_fn(rows.len(), p, |i, j| self.values[(rows[i], j)]);
        let target = DVector::from_fn(rows.len(), |i, _| self.target[rows[i]]);
        DataMatrix {
            values,
            target,
            feature_names: self.feature_names.clone(),
            task: self.task,
        }
    }

    /// Replace the value matrix, keeping target and names. Used by the
    /// standardizer; the replacement must have the same shape.
    pub(crate) fn with_values(&self, values: DMatrix<f64>) -> DataMatrix {
        assert_eq!(values.shape(), self.values.shape());
        DataMatrix {
            values,
            target: self.target.clone(),
            feature_names: self.feature_names.clone(),
            task: self.task,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn rejects_nonfinite_values() {
        let values = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, f64::NAN, 4.0]);
        let target = DVector::from_vec(vec![0.0, 1.0]);
        let err = DataMatrix::new(values, target, names(2), Task::Regression).unwrap_err();
        assert!(matches!(err, Error::BadCell { row: 2, .. }));
    }

    #[test]
    fn rejects_duplicate_feature_names() {
        let values = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        let target = DVector::from_vec(vec![0.0]);
        let err = DataMatrix::new(
            values,
            target,
            vec!["a".into(), "a".into()],
            Task::Regression,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateFeatureName(_)));
    }

    #[test]
    fn rejects_fractional_class_codes() {
        let values = DMatrix::from_row_slice(2, 1, &[1.0, 2.0]);
        let target = DVector::from_vec(vec![0.5, 1.0]);
        assert!(DataMatrix::new(values, target, names(1), Task::Classification).is_err());
    }

    #[test]
    fn class_count_follows_max_code() {
        let values = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let target = DVector::from_vec(vec![0.0, 2.0, 1.0]);
        let d = DataMatrix::new(values, target, names(1), Task::Classification).unwrap();
        assert_eq!(d.n_classes(), 3);
    }

    #[test]
    fn select_rows_preserves_order() {
        let values = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let target = DVector::from_vec(vec![10.0, 20.0, 30.0]);
        let d = DataMatrix::new(values, target, names(2), Task::Regression).unwrap();
        let s = d.select_rows(&[2, 0]);
        assert_eq!(s.row(0), vec![5.0, 6.0]);
        assert_eq!(s.row(1), vec![1.0, 2.0]);
        assert_eq!(s.target()[0], 30.0);
    }
}
