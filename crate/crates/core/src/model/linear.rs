//! Ordinary least squares / ridge regression via the normal equations.

use nalgebra::{Cholesky, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fitted linear model `y = intercept + coefficients . x`.
///
/// Training feature means are stored at fit time: the closed-form Shapley
/// attribution of a linear model is `(x_j - mean_j) * beta_j`, so the means
/// are part of the model, not of the explainer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    intercept: f64,
    coefficients: Vec<f64>,
    feature_means: Vec<f64>,
}

impl LinearModel {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn feature_means(&self) -> &[f64] {
        &self.feature_means
    }

    pub fn n_features(&self) -> usize {
        self.coefficients.len()
    }

    /// Predict a fully observed row. A NaN entry is an error: linear models
    /// never accept missing values, callers impute first.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.coefficients.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.coefficients.len()),
                got: format!("{}", row.len()),
            });
        }
        if let Some(idx) = row.iter().position(|v| v.is_nan()) {
            return Err(Error::MissingValueForLinearModel(idx));
        }
        Ok(self.intercept
            + row
                .iter()
                .zip(&self.coefficients)
                .map(|(x, b)| x * b)
                .sum::<f64>())
    }

    /// Test-only constructor for synthetic models.
    pub fn from_parts(intercept: f64, coefficients: Vec<f64>, feature_means: Vec<f64>) -> Self {
        assert_eq!(coefficients.len(), feature_means.len());
        LinearModel {
            intercept,
            coefficients,
            feature_means,
        }
    }
}

/// Fit by solving the normal equations `(A'A + ridge * D) b = A'y` with an
/// intercept column, where `D` is the identity with a zero in the intercept
/// slot (the intercept is never penalized). In the univariate case this
/// reproduces `beta1 = Cov(x, y) / Var(x)`, `beta0 = E[y] - beta1 E[x]`
/// exactly.
pub fn fit_linear(x: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<LinearModel> {
    let n = x.nrows();
    let p = x.ncols();
    if y.len() != n {
        return Err(Error::LengthMismatch(format!(
            "{n} rows but {} targets",
            y.len()
        )));
    }
    if ridge < 0.0 {
        return Err(Error::InvalidHyperparameter(format!("ridge {ridge} < 0")));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::MissingValueForLinearModel(
            x.iter().position(|v| !v.is_finite()).unwrap_or(0),
        ));
    }

    let mut design = DMatrix::from_element(n, p + 1, 1.0);
    design.view_mut((0, 1), (n, p)).copy_from(x);

    let mut gram = design.transpose() * &design;
    for j in 1..=p {
        gram[(j, j)] += ridge;
    }
    let rhs = design.transpose() * y;

    let chol = Cholesky::new(gram).ok_or(Error::SingularSystem)?;
    // Cholesky succeeds on numerically semi-definite systems; reject those
    // explicitly when no ridge is stabilizing the solve.
    if ridge == 0.0 {
        let diag = chol.l_dirty();
        let (mut min_d, mut max_d) = (f64::INFINITY, 0.0_f64);
        for j in 0..=p {
            let d = diag[(j, j)].abs();
            min_d = min_d.min(d);
            max_d = max_d.max(d);
        }
        // The smallest pivot of an exactly singular system lands near
        // sqrt(machine epsilon) relative scale after rounding.
        if min_d <= 1e-7 * max_d {
            return Err(Error::SingularSystem);
        }
    }
    let beta = chol.solve(&rhs);

    let feature_means = (0..p)
        .map(|j| x.column(j).iter().sum::<f64>() / n as f64)
        .collect();

    Ok(LinearModel {
        intercept: beta[0],
        coefficients: beta.as_slice()[1..].to_vec(),
        feature_means,
    })
}

/// One-vs-rest stack of linear models for classification: one model per
/// class fit on the 0/1 indicator target. Per-class outputs are raw scores
/// (a linear probability model), which keeps the per-class Shapley closed
/// form exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearOvrModel {
    models: Vec<LinearModel>,
}

impl LinearOvrModel {
    pub fn n_classes(&self) -> usize {
        self.models.len()
    }

    pub fn n_features(&self) -> usize {
        self.models[0].n_features()
    }

    pub fn class_model(&self, class: usize) -> &LinearModel {
        &self.models[class]
    }

    pub fn predict_scores(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.models.iter().map(|m| m.predict_row(row)).collect()
    }
}

/// Fit one linear model per class on one-hot targets.
pub fn fit_linear_ovr(
    x: &DMatrix<f64>,
    class_codes: &DVector<f64>,
    n_classes: usize,
    ridge: f64,
) -> Result<LinearOvrModel> {
    if n_classes < 2 {
        return Err(Error::InvalidHyperparameter(format!(
            "n_classes {n_classes} < 2"
        )));
    }
    let models = (0..n_classes)
        .map(|c| {
            let indicator =
                DVector::from_fn(class_codes.len(), |i, _| {
                    if class_codes[i] as usize == c {
                        1.0
                    } else {
                        0.0
                    }
                });
            fit_linear(x, &indicator, ridge)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinearOvrModel { models })
}
