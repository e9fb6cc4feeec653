//! Chained-equation imputation with ridge regressions.
//!
//! Single-chain variant: missing cells start at column means; sweeps visit
//! incomplete columns in ascending-missing-count order, refit a ridge
//! regression of the column on all other columns over the rows where the
//! column is observed, and re-predict its missing cells. Sweeping stops
//! when the largest absolute change across imputed cells drops below `tol`
//! or after `max_sweeps` (recorded as a non-convergence warning).
//!
//! Two guards keep the chain well-behaved at high missing rates:
//! re-predictions are clamped to the train-observed range of their column
//! (linear chains extrapolate without bound otherwise), and transform
//! replays the stored per-sweep model trajectory on the new rows rather
//! than iterating the final models to a fixed point — repeated application
//! of one frozen linear map diverges whenever its spectral radius exceeds
//! one. Rows with no observed entries keep their column-mean fill.

use nalgebra::{DMatrix, DVector};

use crate::data::MaskedMatrix;
use crate::error::{Error, Result};
use crate::impute::{init_completion, Diagnostics};
use crate::model::{fit_linear, LinearModel};

#[derive(Debug, Clone, Copy)]
pub struct MiceParams {
    pub tol: f64,
    pub max_sweeps: usize,
    pub ridge: f64,
}

impl Default for MiceParams {
    fn default() -> Self {
        MiceParams {
            tol: 1e-4,
            max_sweeps: 20,
            ridge: 1e-3,
        }
    }
}

impl MiceParams {
    pub(super) fn validate(&self) -> Result<()> {
        if self.tol <= 0.0 || self.max_sweeps == 0 || self.ridge < 0.0 {
            return Err(Error::InvalidHyperparameter(format!(
                "mice tol {} / max_sweeps {} / ridge {}",
                self.tol, self.max_sweeps, self.ridge
            )));
        }
        Ok(())
    }
}

pub struct MiceState {
    /// Per-sweep, per-column models fit during training; `None` for
    /// columns that were complete in training (their end-of-fit models
    /// live in `final_models`).
    trajectory: Vec<Vec<Option<LinearModel>>>,
    /// One model per column fit on the final completed matrix; used for
    /// columns without a trajectory entry.
    final_models: Vec<LinearModel>,
    means: Vec<f64>,
    /// Train-observed value range per column; predictions clamp to it.
    bounds: Vec<(f64, f64)>,
    order: Vec<usize>,
}

/// Design row for predicting column `col`: every other column in order.
fn covariate_row(completed: &DMatrix<f64>, row: usize, col: usize) -> Vec<f64> {
    (0..completed.ncols())
        .filter(|&j| j != col)
        .map(|j| completed[(row, j)])
        .collect()
}

fn fit_column_model(
    completed: &DMatrix<f64>,
    observed_rows: &[usize],
    col: usize,
    ridge: f64,
) -> Result<LinearModel> {
    let p = completed.ncols();
    let design = DMatrix::from_fn(observed_rows.len(), p - 1, |i, k| {
        let j = if k < col { k } else { k + 1 };
        completed[(observed_rows[i], j)]
    });
    let target = DVector::from_fn(observed_rows.len(), |i, _| completed[(observed_rows[i], col)]);
    fit_linear(&design, &target, ridge)
}

/// Incomplete columns in ascending-missing-count order (ties by index).
fn sweep_order(data: &MaskedMatrix) -> Vec<usize> {
    let observed = data.observed_rows();
    let mut cols: Vec<(usize, usize)> = (0..data.n_features())
        .filter_map(|j| {
            let missing = data.n_rows() - observed[j].len();
            (missing > 0).then_some((missing, j))
        })
        .collect();
    cols.sort_unstable();
    cols.into_iter().map(|(_, j)| j).collect()
}

fn fully_missing(data: &MaskedMatrix) -> Vec<bool> {
    let mut flags = vec![false; data.n_rows()];
    for i in data.mask().fully_missing_rows() {
        flags[i] = true;
    }
    flags
}

fn observed_bounds(data: &MaskedMatrix) -> Vec<(f64, f64)> {
    (0..data.n_features())
        .map(|j| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for i in 0..data.n_rows() {
                if let Some(v) = data.get(i, j) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if lo > hi {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else {
                (lo, hi)
            }
        })
        .collect()
}

pub(super) fn fit(
    train: &MaskedMatrix,
    params: &MiceParams,
) -> Result<(MiceState, DMatrix<f64>, Diagnostics)> {
    let means = super::observed_means(train);
    let bounds = observed_bounds(train);
    let mut completed = init_completion(train, &means);
    let observed = train.observed_rows();
    let order = sweep_order(train);
    let skip_rows = fully_missing(train);

    let mut diagnostics = Diagnostics::default();
    let mut trajectory: Vec<Vec<Option<LinearModel>>> = Vec::new();
    for sweep in 1..=params.max_sweeps {
        let mut max_change = 0.0_f64;
        let mut sweep_models: Vec<Option<LinearModel>> = vec![None; train.n_features()];
        for &col in &order {
            let model = fit_column_model(&completed, &observed[col], col, params.ridge)?;
            let (lo, hi) = bounds[col];
            for i in 0..train.n_rows() {
                if train.get(i, col).is_none() && !skip_rows[i] {
                    let pred = model
                        .predict_row(&covariate_row(&completed, i, col))?
                        .clamp(lo, hi);
                    max_change = max_change.max((pred - completed[(i, col)]).abs());
                    completed[(i, col)] = pred;
                }
            }
            sweep_models[col] = Some(model);
        }
        trajectory.push(sweep_models);
        diagnostics.sweeps = sweep;
        diagnostics.change_trace.push(max_change);
        if max_change < params.tol {
            diagnostics.converged = true;
            break;
        }
    }
    if !diagnostics.converged && !order.is_empty() {
        diagnostics
            .warnings
            .push(format!("no convergence within {} sweeps", params.max_sweeps));
    }
    if order.is_empty() {
        diagnostics.converged = true;
        diagnostics.sweeps = 0;
        trajectory.clear();
    }

    // One model per column on the final completed matrix, so transform can
    // fill test missingness in columns that were complete during training.
    let final_models = (0..train.n_features())
        .map(|col| fit_column_model(&completed, &observed[col], col, params.ridge))
        .collect::<Result<Vec<_>>>()?;

    Ok((
        MiceState {
            trajectory,
            final_models,
            means,
            bounds,
            order,
        },
        completed,
        diagnostics,
    ))
}

pub(super) fn transform(state: &MiceState, data: &MaskedMatrix) -> (DMatrix<f64>, Diagnostics) {
    let mut completed = init_completion(data, &state.means);
    let skip_rows = fully_missing(data);

    // Columns needing fills here: the train sweep order first, then any
    // column that was complete in training but has missing entries now.
    let test_missing = sweep_order(data);
    let mut columns: Vec<usize> = state
        .order
        .iter()
        .copied()
        .filter(|c| test_missing.contains(c))
        .collect();
    for c in &test_missing {
        if !columns.contains(c) {
            columns.push(*c);
        }
    }

    let mut diagnostics = Diagnostics::default();
    if columns.is_empty() {
        diagnostics.converged = true;
        return (completed, diagnostics);
    }

    // Replay the fit trajectory; at least one pass even when training had
    // nothing to impute.
    let sweeps = state.trajectory.len().max(1);
    for sweep in 0..sweeps {
        let mut max_change = 0.0_f64;
        for &col in &columns {
            let model = state
                .trajectory
                .get(sweep)
                .and_then(|m| m[col].as_ref())
                .unwrap_or(&state.final_models[col]);
            let (lo, hi) = state.bounds[col];
            for i in 0..data.n_rows() {
                if data.get(i, col).is_none() && !skip_rows[i] {
                    let pred = model
                        .predict_row(&covariate_row(&completed, i, col))
                        .expect("completed matrix is finite")
                        .clamp(lo, hi);
                    max_change = max_change.max((pred - completed[(i, col)]).abs());
                    completed[(i, col)] = pred;
                }
            }
        }
        diagnostics.sweeps = sweep + 1;
        diagnostics.change_trace.push(max_change);
    }
    diagnostics.converged = true;
    (completed, diagnostics)
}
