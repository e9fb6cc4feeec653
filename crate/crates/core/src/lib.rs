//! Benchmark primitives for studying how missing-data handling distorts
//! Shapley-value explanations of downstream models.
//!
//! The crate is organized around the stages of the benchmark pipeline:
//!
//! * [`data`] — dataset ingestion, standardization, train/test splitting,
//!   and reproducible MCAR mask generation.
//! * [`impute`] — five imputation strategies behind one fit/transform
//!   interface (mean, chained-equation regression, Gaussian conditional,
//!   iterative random forest, soft-thresholded SVD).
//! * [`model`] — closed-form linear regression and gradient-boosted trees
//!   with native missing-value routing.
//! * [`shapley`] — exact Shapley attribution by coalition enumeration, the
//!   linear closed form, and plot-table generators.
//! * [`theory`] — executable identity checks for the mean-imputation
//!   closed-form results (vanishing attributions, covariance deltas,
//!   variance shrinkage).
//! * [`metrics`] — prediction MSE, imputation MSE, Shapley-matrix MSE, and
//!   multi-repetition aggregation.

pub mod data;
pub mod error;
pub mod impute;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod shapley;
pub mod theory;

pub use error::{Error, Result};
