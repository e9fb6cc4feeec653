//! Uniform prediction interface over the fitted model families.
//!
//! Rows are plain `&[f64]` slices with NaN marking a missing entry. Linear
//! models reject missing entries; boosted trees route them down stored
//! default directions. Output is always a vector: length 1 for regression,
//! one entry per class otherwise.

use crate::error::Result;
use crate::model::{GbtModel, LinearModel, LinearOvrModel};

/// Convert margins to a probability vector; `[0, 0, 0]` maps to uniform.
pub fn softmax(margins: &[f64]) -> Vec<f64> {
    let max = margins.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = margins.iter().map(|m| (m - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub trait Predictor: Sync {
    fn n_features(&self) -> usize;
    fn n_outputs(&self) -> usize;
    /// Prediction for one row (NaN = missing). Pure and deterministic.
    fn predict_row(&self, row: &[f64]) -> Result<Vec<f64>>;
}

impl Predictor for LinearModel {
    fn n_features(&self) -> usize {
        LinearModel::n_features(self)
    }

    fn n_outputs(&self) -> usize {
        1
    }

    fn predict_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![LinearModel::predict_row(self, row)?])
    }
}

impl Predictor for LinearOvrModel {
    fn n_features(&self) -> usize {
        LinearOvrModel::n_features(self)
    }

    fn n_outputs(&self) -> usize {
        self.n_classes()
    }

    fn predict_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.predict_scores(row)
    }
}

impl Predictor for GbtModel {
    fn n_features(&self) -> usize {
        GbtModel::n_features(self)
    }

    fn n_outputs(&self) -> usize {
        GbtModel::n_outputs(self)
    }

    fn predict_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        GbtModel::predict_row(self, row)
    }
}
