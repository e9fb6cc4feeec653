//! Coalition value functions.
//!
//! `Marginal` realizes `v(S)` by replacing out-of-coalition features with
//! background values and averaging the model prediction over the background
//! rows. `RetrainLinear` refits the linear family on the coalition's
//! feature subset and predicts with the refit model — the literal
//! retrain-per-coalition semantics, available for linear families only.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{fit_linear, Predictor};

/// Partition of the `p` features into attribution players. Exact
/// enumeration is exponential in the number of players, so wide feature
/// spaces are explained through grouped players.
#[derive(Debug, Clone)]
pub struct FeatureGroups {
    groups: Vec<Vec<usize>>,
    n_features: usize,
}

impl FeatureGroups {
    /// One player per feature.
    pub fn singletons(p: usize) -> FeatureGroups {
        FeatureGroups {
            groups: (0..p).map(|j| vec![j]).collect(),
            n_features: p,
        }
    }

    /// `n_groups` contiguous blocks of near-equal size.
    pub fn contiguous(p: usize, n_groups: usize) -> Result<FeatureGroups> {
        if n_groups == 0 || n_groups > p {
            return Err(Error::InvalidHyperparameter(format!(
                "cannot split {p} features into {n_groups} groups"
            )));
        }
        let base = p / n_groups;
        let extra = p % n_groups;
        let mut groups = Vec::with_capacity(n_groups);
        let mut start = 0;
        for g in 0..n_groups {
            let len = base + usize::from(g < extra);
            groups.push((start..start + len).collect());
            start += len;
        }
        Ok(FeatureGroups {
            groups,
            n_features: p,
        })
    }

    /// Explicit partition; every feature index must appear exactly once.
    pub fn new(groups: Vec<Vec<usize>>, n_features: usize) -> Result<FeatureGroups> {
        let mut seen = vec![false; n_features];
        for g in &groups {
            for &j in g {
                if j >= n_features || seen[j] {
                    return Err(Error::InvalidHyperparameter(format!(
                        "feature {j} repeated or out of range in group partition"
                    )));
                }
                seen[j] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidHyperparameter(
                "group partition does not cover every feature".into(),
            ));
        }
        Ok(FeatureGroups {
            groups,
            n_features,
        })
    }

    pub fn n_players(&self) -> usize {
        self.groups.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn members(&self, player: usize) -> &[usize] {
        &self.groups[player]
    }
}

/// The two coalition-evaluation modes.
pub enum ValueFunction<'a> {
    Marginal {
        model: &'a dyn Predictor,
        /// Complete representative rows; out-of-coalition features take
        /// their values from here.
        background: &'a [Vec<f64>],
    },
    RetrainLinear {
        x: &'a DMatrix<f64>,
        y: &'a DVector<f64>,
        ridge: f64,
    },
}

/// Retrain mode refits `2^p` models per explained row; keep it small.
pub const RETRAIN_MAX_FEATURES: usize = 10;

impl ValueFunction<'_> {
    pub fn n_outputs(&self) -> usize {
        match self {
            ValueFunction::Marginal { model, .. } => model.n_outputs(),
            ValueFunction::RetrainLinear { .. } => 1,
        }
    }

    pub fn validate(&self, groups: &FeatureGroups, row: &[f64]) -> Result<()> {
        if row.len() != groups.n_features() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} features", groups.n_features()),
                got: format!("{}", row.len()),
            });
        }
        match self {
            ValueFunction::Marginal { background, .. } => {
                if background.is_empty() {
                    return Err(Error::InvalidHyperparameter(
                        "marginal mode needs at least one background row".into(),
                    ));
                }
                Ok(())
            }
            ValueFunction::RetrainLinear { .. } => {
                if groups.n_features() > RETRAIN_MAX_FEATURES {
                    return Err(Error::RetrainUnsupported(RETRAIN_MAX_FEATURES));
                }
                Ok(())
            }
        }
    }

    /// `v(S)` for the coalition encoded in `mask` (bit `g` = player `g` in
    /// the coalition), evaluated at `row`.
    pub fn eval(&self, groups: &FeatureGroups, row: &[f64], mask: u32) -> Result<Vec<f64>> {
        match self {
            ValueFunction::Marginal { model, background } => {
                let mut totals = vec![0.0; model.n_outputs()];
                let mut composed = vec![0.0; row.len()];
                for bg in *background {
                    composed.copy_from_slice(bg);
                    for player in 0..groups.n_players() {
                        if mask >> player & 1 == 1 {
                            for &j in groups.members(player) {
                                composed[j] = row[j];
                            }
                        }
                    }
                    let out = model.predict_row(&composed)?;
                    for (t, o) in totals.iter_mut().zip(out) {
                        *t += o;
                    }
                }
                let scale = background.len() as f64;
                totals.iter_mut().for_each(|t| *t /= scale);
                Ok(totals)
            }
            ValueFunction::RetrainLinear { x, y, ridge } => {
                let mut columns: Vec<usize> = Vec::new();
                for player in 0..groups.n_players() {
                    if mask >> player & 1 == 1 {
                        columns.extend_from_slice(groups.members(player));
                    }
                }
                columns.sort_unstable();
                if columns.is_empty() {
                    // Intercept-only fit: the target mean.
                    return Ok(vec![y.iter().sum::<f64>() / y.len() as f64]);
                }
                let sub = DMatrix::from_fn(x.nrows(), columns.len(), |i, k| x[(i, columns[k])]);
                let model = fit_linear(&sub, y, *ridge)?;
                let sub_row: Vec<f64> = columns.iter().map(|&j| row[j]).collect();
                Ok(vec![model.predict_row(&sub_row)?])
            }
        }
    }
}
