//! Imputation strategies behind a single fit-on-train / transform interface.
//!
//! `fit` learns everything from the masked training data; the fitted state
//! completes unseen rows without ever touching their targets or their
//! masked ground truth. `train_imputed` is the completion of the fitting
//! data itself; `transform` completes new rows (typically the test side)
//! against the frozen train state.
//!
//! Invariants shared by every method: observed entries pass through
//! bit-for-bit, all output entries are finite, and identical
//! (spec, seed, data) triples produce identical output.

mod dimv;
mod mean;
mod mice;
mod missforest;
mod softimpute;

use nalgebra::DMatrix;

use crate::data::{Mask, MaskedMatrix};
use crate::error::{Error, Result};

pub use dimv::DimvParams;
pub use mice::MiceParams;
pub use missforest::MissForestParams;
pub use softimpute::SoftImputeParams;

/// Imputation method plus hyperparameters.
#[derive(Debug, Clone)]
pub enum Method {
    Mean,
    Mice(MiceParams),
    Dimv(DimvParams),
    MissForest(MissForestParams),
    SoftImpute(SoftImputeParams),
}

impl Method {
    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Mean => MethodKind::Mean,
            Method::Mice(_) => MethodKind::Mice,
            Method::Dimv(_) => MethodKind::Dimv,
            Method::MissForest(_) => MethodKind::MissForest,
            Method::SoftImpute(_) => MethodKind::SoftImpute,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Method::Mean => Ok(()),
            Method::Mice(p) => p.validate(),
            Method::Dimv(p) => p.validate(),
            Method::MissForest(p) => p.validate(),
            Method::SoftImpute(p) => p.validate(),
        }
    }
}

/// Method tag without hyperparameters; carried on every [`ImputedMatrix`]
/// so downstream checks can assert which method produced a completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodKind {
    Mean,
    Mice,
    Dimv,
    MissForest,
    SoftImpute,
}

impl MethodKind {
    pub fn name(&self) -> &'static str {
        match self {
            MethodKind::Mean => "mean",
            MethodKind::Mice => "mice",
            MethodKind::Dimv => "dimv",
            MethodKind::MissForest => "missforest",
            MethodKind::SoftImpute => "softimpute",
        }
    }
}

/// Method, hyperparameters, and the seed driving any randomized internals.
#[derive(Debug, Clone)]
pub struct ImputerSpec {
    pub method: Method,
    pub seed: u64,
}

impl ImputerSpec {
    pub fn new(method: Method, seed: u64) -> Result<ImputerSpec> {
        method.validate()?;
        Ok(ImputerSpec { method, seed })
    }

    pub fn mean() -> ImputerSpec {
        ImputerSpec {
            method: Method::Mean,
            seed: 0,
        }
    }
}

/// Convergence bookkeeping; non-convergence is a warning here, never an
/// error.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    pub sweeps: usize,
    pub converged: bool,
    /// Regularized objective per iteration (soft-thresholded SVD only).
    pub objective_trace: Vec<f64>,
    /// Per-sweep change statistic (max abs change for chained equations,
    /// summed squared change for the forest).
    pub change_trace: Vec<f64>,
    pub warnings: Vec<String>,
}

/// A completed matrix plus the mask it was derived from.
#[derive(Debug, Clone)]
pub struct ImputedMatrix {
    values: DMatrix<f64>,
    source_mask: Mask,
    kind: MethodKind,
    diagnostics: Diagnostics,
}

impl ImputedMatrix {
    fn new(
        values: DMatrix<f64>,
        source_mask: Mask,
        kind: MethodKind,
        diagnostics: Diagnostics,
    ) -> ImputedMatrix {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        ImputedMatrix {
            values,
            source_mask,
            kind,
            diagnostics,
        }
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn source_mask(&self) -> &Mask {
        &self.source_mask
    }

    pub fn method_kind(&self) -> MethodKind {
        self.kind
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }
}

enum FittedState {
    Mean(mean::MeanState),
    Mice(mice::MiceState),
    Dimv(dimv::DimvState),
    MissForest(missforest::MissForestState),
    SoftImpute(softimpute::SoftImputeState),
}

/// Frozen train-derived imputation state.
pub struct FittedImputer {
    state: FittedState,
    train_imputed: ImputedMatrix,
    n_features: usize,
}

/// Fit an imputer on masked training data. Every column needs at least one
/// observed entry; the first offender is reported by name.
pub fn fit(spec: &ImputerSpec, train: &MaskedMatrix) -> Result<FittedImputer> {
    spec.method.validate()?;
    for (j, rows) in train.observed_rows().iter().enumerate() {
        if rows.is_empty() {
            return Err(Error::EmptyColumn(train.feature_names()[j].clone()));
        }
    }

    let (state, values, diagnostics) = match &spec.method {
        Method::Mean => {
            let (s, v, d) = mean::fit(train);
            (FittedState::Mean(s), v, d)
        }
        Method::Mice(p) => {
            let (s, v, d) = mice::fit(train, p)?;
            (FittedState::Mice(s), v, d)
        }
        Method::Dimv(p) => {
            let (s, v, d) = dimv::fit(train, p)?;
            (FittedState::Dimv(s), v, d)
        }
        Method::MissForest(p) => {
            let (s, v, d) = missforest::fit(train, p, spec.seed);
            (FittedState::MissForest(s), v, d)
        }
        Method::SoftImpute(p) => {
            let (s, v, d) = softimpute::fit(train, p);
            (FittedState::SoftImpute(s), v, d)
        }
    };

    let train_imputed = ImputedMatrix::new(
        values,
        train.mask().clone(),
        spec.method.kind(),
        diagnostics,
    );
    Ok(FittedImputer {
        state,
        train_imputed,
        n_features: train.n_features(),
    })
}

impl FittedImputer {
    /// Completion of the data the imputer was fit on.
    pub fn train_imputed(&self) -> &ImputedMatrix {
        &self.train_imputed
    }

    pub fn method_kind(&self) -> MethodKind {
        self.train_imputed.method_kind()
    }

    /// Complete new rows using only train-derived statistics. The input
    /// must have the same feature count and ordering as the fitting data.
    pub fn transform(&self, data: &MaskedMatrix) -> Result<ImputedMatrix> {
        if data.n_features() != self.n_features {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", self.n_features),
                got: format!("{}", data.n_features()),
            });
        }
        let (values, diagnostics) = match &self.state {
            FittedState::Mean(s) => mean::transform(s, data),
            FittedState::Mice(s) => mice::transform(s, data),
            FittedState::Dimv(s) => dimv::transform(s, data),
            FittedState::MissForest(s) => missforest::transform(s, data),
            FittedState::SoftImpute(s) => softimpute::transform(s, &self.train_imputed, data),
        };
        Ok(ImputedMatrix::new(
            values,
            data.mask().clone(),
            self.method_kind(),
            diagnostics,
        ))
    }
}

/// Start a completion from the observed entries, filling missing cells with
/// per-column values. Observed entries are copied bit-for-bit, which is what
/// makes the pass-through invariant structural.
fn init_completion(data: &MaskedMatrix, fill: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(data.n_rows(), data.n_features(), |i, j| {
        data.get(i, j).unwrap_or(fill[j])
    })
}

/// Column means of the observed entries (0 for a column with none; `fit`
/// rejects that case for training data, but transform inputs may be tiny).
fn observed_means(data: &MaskedMatrix) -> Vec<f64> {
    (0..data.n_features())
        .map(|j| {
            let (mut sum, mut count) = (0.0, 0usize);
            for i in 0..data.n_rows() {
                if let Some(v) = data.get(i, j) {
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
