//! Gradient-boosted trees over the sparsity-aware tree learner.
//!
//! Plain (first-order) gradient boosting: squared loss for regression,
//! one-vs-rest logistic loss for classification with per-class margins
//! turned into probabilities by softmax. Missing entries are legal both in
//! training and inference; they follow each split's stored default
//! direction.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Task;
use crate::error::{Error, Result};
use crate::model::predictor::softmax;
use crate::model::tree::{RegressionTree, TreeParams};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GbtParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_samples_leaf: 5,
            seed: 0,
        }
    }
}

/// Fitted boosted ensemble. For classification there is one tree sequence
/// per class; `base_scores` holds the initial margin per output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbtModel {
    task: Task,
    n_features: usize,
    base_scores: Vec<f64>,
    trees: Vec<Vec<RegressionTree>>,
    learning_rate: f64,
    /// Mean of the observed entries per training feature; the canonical
    /// background row for marginal explainers.
    feature_means: Vec<f64>,
}

impl GbtModel {
    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_outputs(&self) -> usize {
        self.base_scores.len()
    }

    pub fn n_trees_per_output(&self) -> usize {
        self.trees.first().map_or(0, |t| t.len())
    }

    pub fn feature_means(&self) -> &[f64] {
        &self.feature_means
    }

    pub fn trees(&self) -> &[Vec<RegressionTree>] {
        &self.trees
    }

    /// Raw additive margins, one per output.
    pub fn predict_margins(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.n_features {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.n_features),
                got: format!("{}", row.len()),
            });
        }
        Ok(self
            .base_scores
            .iter()
            .zip(&self.trees)
            .map(|(base, seq)| {
                base + self.learning_rate
                    * seq.iter().map(|t| t.predict_row(row)).sum::<f64>()
            })
            .collect())
    }

    /// Regression: the margin. Classification: softmax probabilities over
    /// the per-class margins.
    pub fn predict_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        let margins = self.predict_margins(row)?;
        Ok(match self.task {
            Task::Regression => margins,
            Task::Classification => softmax(&margins),
        })
    }

    /// Test-only: rebuild with a different tree set (used to construct
    /// symmetric models in axiom checks).
    pub fn with_trees(&self, trees: Vec<Vec<RegressionTree>>) -> GbtModel {
        GbtModel {
            trees,
            ..self.clone()
        }
    }
}

fn observed_column_means(x: &DMatrix<f64>) -> Vec<f64> {
    (0..x.ncols())
        .map(|j| {
            let (mut sum, mut count) = (0.0, 0usize);
            for v in x.column(j).iter() {
                if !v.is_nan() {
                    sum += v;
                    count += 1;
                }
            }
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect()
}

fn tree_params(params: &GbtParams) -> TreeParams {
    TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        mtry: None,
    }
}

/// Squared-error boosting. `x` may contain NaN (missing) entries; `y` must
/// be finite.
pub fn fit_gbt_regression(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    params: &GbtParams,
) -> Result<GbtModel> {
    let n = x.nrows();
    if y.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{n} rows but {} targets",
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidHyperparameter(
            "regression targets must be finite".into(),
        ));
    }

    let base = y.iter().sum::<f64>() / n.max(1) as f64;
    let rows: Vec<usize> = (0..n).collect();
    let tp = tree_params(params);

    let mut margins = vec![base; n];
    let mut trees = Vec::with_capacity(params.n_trees);
    for _ in 0..params.n_trees {
        let residuals: Vec<f64> = (0..n).map(|i| y[i] - margins[i]).collect();
        let tree = RegressionTree::grow(x, &residuals, &rows, &tp, None);
        for i in 0..n {
            margins[i] += params.learning_rate * tree.predict_row(&row_of(x, i));
        }
        trees.push(tree);
    }

    Ok(GbtModel {
        task: Task::Regression,
        n_features: x.ncols(),
        base_scores: vec![base],
        trees: vec![trees],
        learning_rate: params.learning_rate,
        feature_means: observed_column_means(x),
    })
}

/// One-vs-rest logistic boosting: per class, trees fit the residual
/// `indicator - sigmoid(margin)`; the base margin is the clamped log-odds
/// of the class frequency.
pub fn fit_gbt_classification(
    x: &DMatrix<f64>,
    class_codes: &DVector<f64>,
    n_classes: usize,
    params: &GbtParams,
) -> Result<GbtModel> {
    let n = x.nrows();
    if class_codes.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{n} rows but {} targets",
            class_codes.len()
        )));
    }
    if n_classes < 2 {
        return Err(Error::InvalidHyperparameter(format!(
            "n_classes {n_classes} < 2"
        )));
    }

    let rows: Vec<usize> = (0..n).collect();
    let tp = tree_params(params);

    let mut base_scores = Vec::with_capacity(n_classes);
    let mut margins = vec![vec![0.0; n]; n_classes];
    let mut indicators = vec![vec![0.0; n]; n_classes];
    for c in 0..n_classes {
        for i in 0..n {
            indicators[c][i] = if class_codes[i] as usize == c { 1.0 } else { 0.0 };
        }
        let pi = (indicators[c].iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let base = (pi / (1.0 - pi)).ln();
        base_scores.push(base);
        margins[c].iter_mut().for_each(|m| *m = base);
    }

    let mut trees: Vec<Vec<RegressionTree>> = vec![Vec::with_capacity(params.n_trees); n_classes];
    for _ in 0..params.n_trees {
        for c in 0..n_classes {
            let residuals: Vec<f64> = (0..n)
                .map(|i| indicators[c][i] - sigmoid(margins[c][i]))
                .collect();
            let tree = RegressionTree::grow(x, &residuals, &rows, &tp, None);
            for i in 0..n {
                margins[c][i] += params.learning_rate * tree.predict_row(&row_of(x, i));
            }
            trees[c].push(tree);
        }
    }

    Ok(GbtModel {
        task: Task::Classification,
        n_features: x.ncols(),
        base_scores,
        trees,
        learning_rate: params.learning_rate,
        feature_means: observed_column_means(x),
    })
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn row_of(x: &DMatrix<f64>, i: usize) -> Vec<f64> {
    x.row(i).iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data() -> (DMatrix<f64>, DVector<f64>) {
        let xs = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];
        let ys = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        (
            DMatrix::from_column_slice(8, 1, &xs),
            DVector::from_column_slice(&ys),
        )
    }

    #[test]
    fn single_stump_learns_the_step() {
        let (x, y) = step_data();
        let m = fit_gbt_regression(
            &x,
            &y,
            &GbtParams {
                n_trees: 1,
                max_depth: 1,
                learning_rate: 1.0,
                min_samples_leaf: 1,
                seed: 0,
            },
        )
        .unwrap();
        assert!((m.predict_row(&[-1.0]).unwrap()[0]).abs() < 1e-12);
        assert!((m.predict_row(&[1.0]).unwrap()[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_trees_predicts_target_mean() {
        let (x, y) = step_data();
        let m = fit_gbt_regression(
            &x,
            &y,
            &GbtParams {
                n_trees: 0,
                ..GbtParams::default()
            },
        )
        .unwrap();
        assert!((m.predict_row(&[3.0]).unwrap()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn missing_rows_get_the_default_leaf_value() {
        // 30% of x masked on step data, masked rows carry y = 1.
        let xs = [
            -2.0,
            -1.5,
            -1.0,
            -0.5,
            0.5,
            1.0,
            f64::NAN,
            f64::NAN,
            f64::NAN,
        ];
        let ys = [0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let x = DMatrix::from_column_slice(9, 1, &xs);
        let y = DVector::from_column_slice(&ys);
        let m = fit_gbt_regression(
            &x,
            &y,
            &GbtParams {
                n_trees: 1,
                max_depth: 1,
                learning_rate: 1.0,
                min_samples_leaf: 1,
                seed: 0,
            },
        )
        .unwrap();
        // The missing-row prediction equals the prediction of an observed
        // row on the default side of the split.
        let miss = m.predict_row(&[f64::NAN]).unwrap()[0];
        let high = m.predict_row(&[1.0]).unwrap()[0];
        assert!((miss - high).abs() < 1e-12);
        assert!((miss - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_mse_is_nonincreasing_in_tree_count() {
        let mut rng = crate::rng::StreamRng::new(8);
        let n = 120;
        let x = DMatrix::from_fn(n, 3, |_, _| rng.standard_normal());
        let y = DVector::from_fn(n, |i, _| {
            (x[(i, 0)] * 1.5 - x[(i, 1)]).sin() + x[(i, 2)] + 0.1 * rng.standard_normal()
        });
        let mut last = f64::INFINITY;
        for n_trees in [0, 1, 5, 20, 60] {
            let m = fit_gbt_regression(
                &x,
                &y,
                &GbtParams {
                    n_trees,
                    ..GbtParams::default()
                },
            )
            .unwrap();
            let mse = (0..n)
                .map(|i| {
                    let pred = m.predict_row(&row_of(&x, i)).unwrap()[0];
                    (pred - y[i]) * (pred - y[i])
                })
                .sum::<f64>()
                / n as f64;
            assert!(
                mse <= last + 1e-12,
                "mse rose from {last} to {mse} at {n_trees} trees"
            );
            last = mse;
        }
    }

    #[test]
    fn classification_probabilities_sum_to_one_and_separate_classes() {
        let mut rng = crate::rng::StreamRng::new(10);
        let n = 90;
        let x = DMatrix::from_fn(n, 2, |i, j| {
            let class = (i % 3) as f64;
            rng.standard_normal() * 0.3 + class * if j == 0 { 2.0 } else { -1.0 }
        });
        let codes = DVector::from_fn(n, |i, _| (i % 3) as f64);
        let m = fit_gbt_classification(
            &x,
            &codes,
            3,
            &GbtParams {
                n_trees: 30,
                ..GbtParams::default()
            },
        )
        .unwrap();
        let mut correct = 0;
        for i in 0..n {
            let probs = m.predict_row(&row_of(&x, i)).unwrap();
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let argmax = probs
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            if argmax == codes[i] as usize {
                correct += 1;
            }
        }
        assert!(correct as f64 / n as f64 > 0.9, "accuracy {correct}/{n}");
    }

    #[test]
    fn determinism_across_repeated_fits() {
        let mut rng = crate::rng::StreamRng::new(12);
        let x = DMatrix::from_fn(50, 3, |_, _| {
            if rng.uniform() < 0.2 {
                f64::NAN
            } else {
                rng.standard_normal()
            }
        });
        let y = DVector::from_fn(50, |i, _| (i as f64 * 0.37).sin());
        let p = GbtParams {
            n_trees: 10,
            ..GbtParams::default()
        };
        let a = fit_gbt_regression(&x, &y, &p).unwrap();
        let b = fit_gbt_regression(&x, &y, &p).unwrap();
        let row = vec![0.3, f64::NAN, -0.7];
        assert_eq!(
            a.predict_row(&row).unwrap(),
            b.predict_row(&row).unwrap()
        );
    }
}
