//! Downstream predictors: closed-form (ridge-stabilized) linear regression
//! and gradient-boosted trees that route missing values down a learned
//! default direction per split.

mod forest;
mod gbt;
mod linear;
mod persist;
mod predictor;
mod tree;

pub use forest::{fit_random_forest, ForestParams, RandomForest};
pub use gbt::{fit_gbt_classification, fit_gbt_regression, GbtModel, GbtParams};
pub use linear::{fit_linear, fit_linear_ovr, LinearModel, LinearOvrModel};
pub use persist::SavedModel;
pub use predictor::{softmax, Predictor};
pub use tree::{Node, RegressionTree, TreeParams};
