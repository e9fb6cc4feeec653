//! Evaluation quantities: prediction MSE on test labels, imputation MSE on
//! simulated-missing test inputs, MSE between Shapley matrices, and
//! multi-repetition aggregation.
//!
//! This module (together with [`crate::theory`]) is the only consumer of
//! the masked ground-truth channel; everything else sees missing cells as
//! missing.

use crate::data::MaskedMatrix;
use crate::error::{Error, Result};
use crate::impute::ImputedMatrix;
use crate::shapley::ShapleyMatrix;

/// Which quantity a metric cell holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criteria {
    PredictionMse,
    ImputationMse,
    MseShap,
}

impl Criteria {
    pub fn name(&self) -> &'static str {
        match self {
            Criteria::PredictionMse => "prediction_mse",
            Criteria::ImputationMse => "imputation_mse",
            Criteria::MseShap => "mse_shap",
        }
    }
}

/// One aggregated table cell: the mean over repetitions plus the retained
/// per-repetition values and dispersion summaries.
#[derive(Debug, Clone)]
pub struct MetricCell {
    pub dataset: String,
    pub rate: f64,
    pub method: String,
    pub criteria: Criteria,
    pub value: f64,
    pub n_repetitions: usize,
    pub per_repetition: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

/// Mean squared difference between predictions and truth.
pub fn prediction_mse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    if pred.len() != truth.len() || pred.is_empty() {
        return Err(Error::LengthMismatch(format!(
            "prediction_mse over {} vs {} values",
            pred.len(),
            truth.len()
        )));
    }
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64)
}

/// Mean squared error over the simulated-missing cells only, evaluated
/// against the sequestered ground truth. `None` when the mask has no
/// missing cells (the quantity is undefined, never 0).
pub fn imputation_mse(imputed: &ImputedMatrix, masked: &MaskedMatrix) -> Result<Option<f64>> {
    let mask = masked.mask();
    if imputed.source_mask() != mask {
        return Err(Error::ShapeMismatch {
            expected: "imputed matrix derived from the given mask".into(),
            got: "a different mask".into(),
        });
    }
    let truth = masked.ground_truth().values();
    let (mut total, mut count) = (0.0, 0usize);
    for i in 0..mask.n_rows() {
        for j in 0..mask.n_cols() {
            if !mask.is_observed(i, j) {
                let d = imputed.values()[(i, j)] - truth[(i, j)];
                total += d * d;
                count += 1;
            }
        }
    }
    Ok((count > 0).then(|| total / count as f64))
}

/// Mean over all entries (every output stack) of the squared difference
/// between two aligned Shapley matrices. Symmetric in its arguments;
/// refuses matrices whose sample-id sequences differ.
pub fn mse_shap(a: &ShapleyMatrix, b: &ShapleyMatrix) -> Result<f64> {
    if a.sample_ids() != b.sample_ids() {
        return Err(Error::MisalignedSamples);
    }
    if a.n_outputs() != b.n_outputs() || a.n_players() != b.n_players() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} outputs x {} players", a.n_outputs(), a.n_players()),
            got: format!("{} outputs x {} players", b.n_outputs(), b.n_players()),
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for out in 0..a.n_outputs() {
        let (sa, sb) = (a.stack(out), b.stack(out));
        for (x, y) in sa.iter().zip(sb.iter()) {
            total += (x - y) * (x - y);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Aggregate per-repetition values into a cell: arithmetic mean, with
/// min/max and population standard deviation for dispersion reporting.
pub fn aggregate(
    dataset: &str,
    rate: f64,
    method: &str,
    criteria: Criteria,
    per_repetition: &[f64],
) -> Result<MetricCell> {
    if per_repetition.is_empty() {
        return Err(Error::LengthMismatch("aggregate over 0 repetitions".into()));
    }
    let n = per_repetition.len() as f64;
    let mean = per_repetition.iter().sum::<f64>() / n;
    let var = per_repetition
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n;
    Ok(MetricCell {
        dataset: dataset.to_string(),
        rate,
        method: method.to_string(),
        criteria,
        value: mean,
        n_repetitions: per_repetition.len(),
        per_repetition: per_repetition.to_vec(),
        min: per_repetition.iter().copied().fold(f64::INFINITY, f64::min),
        max: per_repetition
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max),
        std: var.sqrt(),
    })
}
