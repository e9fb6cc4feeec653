//! Bagged random forest on the shared tree learner; the regressor behind
//! iterative forest imputation.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::tree::{RegressionTree, TreeParams};
use crate::rng::StreamRng;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features considered per split; `None` defaults to `ceil(p / 3)`.
    pub mtry: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 50,
            max_depth: 8,
            min_samples_leaf: 2,
            mtry: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

/// Fit a forest of bootstrap trees. Per-tree RNG streams are derived from
/// `(seed, "rf-tree", t)`, so fits are deterministic regardless of caller
/// state or thread count.
pub fn fit_random_forest(
    x: &DMatrix<f64>,
    y: &[f64],
    params: &ForestParams,
    seed: u64,
) -> RandomForest {
    let n = x.nrows();
    let p = x.ncols();
    let mtry = params.mtry.unwrap_or_else(|| p.div_ceil(3)).clamp(1, p);
    let tp = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        mtry: Some(mtry),
    };
    let trees = (0..params.n_trees)
        .map(|t| {
            let mut rng = StreamRng::derived(seed, "rf-tree", t as u64);
            let rows = rng.bootstrap_indices(n);
            RegressionTree::grow(x, y, &rows, &tp, Some(&mut rng))
        })
        .collect();
    RandomForest { trees }
}
