//! Iterative random-forest imputation.
//!
//! Missing cells start at column means. Each sweep visits incomplete
//! columns in ascending-missing-count order, fits a random forest of the
//! column on all other columns over the rows where the column is observed,
//! and re-predicts the missing cells in place. Sweeping stops at the first
//! sweep where the summed squared difference between successive completions
//! increases; the previous sweep's completion (and its forests) are kept.
//!
//! Transform freezes the kept forests and runs the same schedule over new
//! rows; rows with nothing observed keep their column-mean fill.

use nalgebra::DMatrix;

use crate::data::MaskedMatrix;
use crate::error::{Error, Result};
use crate::impute::{init_completion, Diagnostics};
use crate::model::{fit_random_forest, ForestParams, RandomForest};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy)]
pub struct MissForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub max_sweeps: usize,
    pub min_samples_leaf: usize,
}

impl Default for MissForestParams {
    fn default() -> Self {
        MissForestParams {
            n_trees: 50,
            max_depth: 8,
            max_sweeps: 10,
            min_samples_leaf: 2,
        }
    }
}

impl MissForestParams {
    pub(super) fn validate(&self) -> Result<()> {
        if self.n_trees == 0 || self.max_sweeps == 0 || self.max_depth == 0 {
            return Err(Error::InvalidHyperparameter(format!(
                "missforest n_trees {} / max_depth {} / max_sweeps {}",
                self.n_trees, self.max_depth, self.max_sweeps
            )));
        }
        Ok(())
    }

    fn forest(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            mtry: None,
        }
    }
}

pub struct MissForestState {
    forests: Vec<RandomForest>,
    means: Vec<f64>,
    params: MissForestParams,
}

fn covariate_row(completed: &DMatrix<f64>, row: usize, col: usize) -> Vec<f64> {
    (0..completed.ncols())
        .filter(|&j| j != col)
        .map(|j| completed[(row, j)])
        .collect()
}

fn fit_column_forest(
    completed: &DMatrix<f64>,
    observed_rows: &[usize],
    col: usize,
    params: &ForestParams,
    seed: u64,
) -> RandomForest {
    let p = completed.ncols();
    let design = DMatrix::from_fn(observed_rows.len(), p - 1, |i, k| {
        let j = if k < col { k } else { k + 1 };
        completed[(observed_rows[i], j)]
    });
    let targets: Vec<f64> = observed_rows
        .iter()
        .map(|&i| completed[(i, col)])
        .collect();
    fit_random_forest(&design, &targets, params, seed)
}

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

pub(super) fn fit(
    train: &MaskedMatrix,
    params: &MissForestParams,
    seed: u64,
) -> (MissForestState, DMatrix<f64>, Diagnostics) {
    let means = super::observed_means(train);
    let observed = train.observed_rows();
    let order = sweep_order(train);
    let skip_rows = fully_missing(train);
    let fp = params.forest();

    let mut completed = init_completion(train, &means);
    let mut diagnostics = Diagnostics::default();
    let mut kept_forests: Vec<Option<RandomForest>> = vec![None; train.n_features()];
    let mut prev_delta = f64::INFINITY;

    for sweep in 1..=params.max_sweeps {
        let snapshot = completed.clone();
        let mut sweep_forests: Vec<Option<RandomForest>> = vec![None; train.n_features()];
        let mut delta = 0.0;
        for &col in &order {
            let forest_seed = derive_seed(seed, "missforest", ((sweep as u64) << 32) | col as u64);
            let forest = fit_column_forest(&completed, &observed[col], col, &fp, forest_seed);
            for i in 0..train.n_rows() {
                if train.get(i, col).is_none() && !skip_rows[i] {
                    let pred = forest.predict_row(&covariate_row(&completed, i, col));
                    let diff = pred - completed[(i, col)];
                    delta += diff * diff;
                    completed[(i, col)] = pred;
                }
            }
            sweep_forests[col] = Some(forest);
        }
        diagnostics.change_trace.push(delta);

        if sweep > 1 && delta > prev_delta {
            // Error between successive completions rose: keep the previous
            // sweep's matrix and forests.
            completed = snapshot;
            diagnostics.sweeps = sweep - 1;
            diagnostics.converged = true;
            break;
        }
        kept_forests = sweep_forests;
        diagnostics.sweeps = sweep;
        prev_delta = delta;
        if delta == 0.0 {
            diagnostics.converged = true;
            break;
        }
    }
    if !diagnostics.converged && !order.is_empty() {
        diagnostics.warnings.push(format!(
            "stopping rule not triggered within {} sweeps",
            params.max_sweeps
        ));
    }
    if order.is_empty() {
        diagnostics.converged = true;
        diagnostics.sweeps = 0;
    }

    // Columns that were complete in training still need forests so that
    // transform can fill test cells missing there.
    let forests: Vec<RandomForest> = (0..train.n_features())
        .map(|col| {
            kept_forests[col].take().unwrap_or_else(|| {
                let forest_seed = derive_seed(seed, "missforest-full", col as u64);
                fit_column_forest(&completed, &observed[col], col, &fp, forest_seed)
            })
        })
        .collect();

    (
        MissForestState {
            forests,
            means,
            params: *params,
        },
        completed,
        diagnostics,
    )
}

pub(super) fn transform(
    state: &MissForestState,
    data: &MaskedMatrix,
) -> (DMatrix<f64>, Diagnostics) {
    let mut completed = init_completion(data, &state.means);
    let order = sweep_order(data);
    let skip_rows = fully_missing(data);

    let mut diagnostics = Diagnostics::default();
    if order.is_empty() {
        diagnostics.converged = true;
        return (completed, diagnostics);
    }

    let mut prev_delta = f64::INFINITY;
    for sweep in 1..=state.params.max_sweeps {
        let snapshot = completed.clone();
        let mut delta = 0.0;
        for &col in &order {
            for i in 0..data.n_rows() {
                if data.get(i, col).is_none() && !skip_rows[i] {
                    let pred = state.forests[col].predict_row(&covariate_row(&completed, i, col));
                    let diff = pred - completed[(i, col)];
                    delta += diff * diff;
                    completed[(i, col)] = pred;
                }
            }
        }
        diagnostics.change_trace.push(delta);
        if sweep > 1 && delta > prev_delta {
            completed = snapshot;
            diagnostics.sweeps = sweep - 1;
            diagnostics.converged = true;
            break;
        }
        diagnostics.sweeps = sweep;
        prev_delta = delta;
        if delta == 0.0 {
            diagnostics.converged = true;
            break;
        }
    }
    (completed, diagnostics)
}
