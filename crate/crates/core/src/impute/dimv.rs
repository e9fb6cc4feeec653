//! Gaussian conditional-expectation imputation with ridge regularization.
//!
//! The mean vector and covariance matrix are estimated from available
//! cases: each covariance entry uses the rows where both features are
//! observed, centered on the pairwise means (population convention).
//! The assembled matrix is symmetric by construction and projected to the
//! nearest positive semidefinite matrix by eigenvalue clamping when
//! sampling noise pushes it outside the cone.
//!
//! Each row is completed independently: with observed set `O` and missing
//! set `M`, the fill is `mu_M + S_MO (S_OO + lambda I)^-1 (x_O - mu_O)`;
//! a row with nothing observed falls back to the marginal means.

use nalgebra::{DMatrix, DVector};

use crate::data::MaskedMatrix;
use crate::error::{Error, Result};
use crate::impute::Diagnostics;

#[derive(Debug, Clone, Copy)]
pub struct DimvParams {
    /// Ridge added to the observed-block diagonal before the solve.
    pub lambda: f64,
}

impl Default for DimvParams {
    fn default() -> Self {
        DimvParams { lambda: 0.1 }
    }
}

impl DimvParams {
    pub(super) fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(Error::InvalidHyperparameter(format!(
                "dimv lambda {} < 0",
                self.lambda
            )));
        }
        Ok(())
    }
}

pub struct DimvState {
    mean: Vec<f64>,
    cov: DMatrix<f64>,
    lambda: f64,
}

fn pairwise_covariance(data: &MaskedMatrix) -> (DMatrix<f64>, bool) {
    let p = data.n_features();
    let n = data.n_rows();
    let mut cov = DMatrix::zeros(p, p);
    let mut had_empty_pair = false;
    for j in 0..p {
        for k in j..p {
            let mut pairs: Vec<(f64, f64)> = Vec::new();
            for i in 0..n {
                if let (Some(a), Some(b)) = (data.get(i, j), data.get(i, k)) {
                    pairs.push((a, b));
                }
            }
            let c = if pairs.is_empty() {
                had_empty_pair = true;
                0.0
            } else {
                let m = pairs.len() as f64;
                let mean_a = pairs.iter().map(|(a, _)| a).sum::<f64>() / m;
                let mean_b = pairs.iter().map(|(_, b)| b).sum::<f64>() / m;
                pairs
                    .iter()
                    .map(|(a, b)| (a - mean_a) * (b - mean_b))
                    .sum::<f64>()
                    / m
            };
            cov[(j, k)] = c;
            cov[(k, j)] = c;
        }
    }
    (cov, had_empty_pair)
}

/// Clamp negative eigenvalues to zero; returns whether anything changed.
fn project_psd(cov: &mut DMatrix<f64>) -> bool {
    let eig = nalgebra::SymmetricEigen::new(cov.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return false;
    }
    let clamped = DVector::from_fn(eig.eigenvalues.len(), |i, _| eig.eigenvalues[i].max(0.0));
    let scaled = &eig.eigenvectors * DMatrix::from_diagonal(&clamped);
    *cov = &scaled * eig.eigenvectors.transpose();
    // Re-symmetrize against rounding in the reconstruction.
    let sym = (cov.clone() + cov.transpose()) * 0.5;
    *cov = sym;
    true
}

fn complete_row(state: &DimvState, data: &MaskedMatrix, i: usize, out: &mut DMatrix<f64>) {
    let p = data.n_features();
    let observed: Vec<usize> = (0..p).filter(|&j| data.get(i, j).is_some()).collect();
    let missing: Vec<usize> = (0..p).filter(|&j| data.get(i, j).is_none()).collect();
    if missing.is_empty() {
        return;
    }
    if observed.is_empty() {
        for &j in &missing {
            out[(i, j)] = state.mean[j];
        }
        return;
    }

    let q = observed.len();
    let mut s_oo = DMatrix::from_fn(q, q, |a, b| state.cov[(observed[a], observed[b])]);
    for a in 0..q {
        s_oo[(a, a)] += state.lambda;
    }
    let centered = DVector::from_fn(q, |a, _| {
        data.get(i, observed[a]).unwrap() - state.mean[observed[a]]
    });

    let weights = nalgebra::Cholesky::new(s_oo.clone())
        .map(|c| c.solve(&centered))
        .or_else(|| s_oo.lu().solve(&centered));

    match weights {
        Some(w) => {
            for &j in &missing {
                let s_mo = DVector::from_fn(q, |a, _| state.cov[(j, observed[a])]);
                out[(i, j)] = state.mean[j] + s_mo.dot(&w);
            }
        }
        None => {
            // Degenerate observed block with lambda = 0: marginal fallback.
            for &j in &missing {
                out[(i, j)] = state.mean[j];
            }
        }
    }
}

pub(super) fn fit(
    train: &MaskedMatrix,
    params: &DimvParams,
) -> Result<(DimvState, DMatrix<f64>, Diagnostics)> {
    let mean = super::observed_means(train);
    let (mut cov, had_empty_pair) = pairwise_covariance(train);
    let repaired = project_psd(&mut cov);

    let mut diagnostics = Diagnostics {
        sweeps: 1,
        converged: true,
        ..Diagnostics::default()
    };
    if had_empty_pair {
        diagnostics
            .warnings
            .push("some feature pairs share no observed rows; their covariance is 0".into());
    }
    if repaired {
        diagnostics
            .warnings
            .push("pairwise covariance projected to nearest positive semidefinite".into());
    }

    let state = DimvState {
        mean,
        cov,
        lambda: params.lambda,
    };
    let mut values = super::init_completion(train, &state.mean);
    for i in 0..train.n_rows() {
        complete_row(&state, train, i, &mut values);
    }
    Ok((state, values, diagnostics))
}

pub(super) fn transform(state: &DimvState, data: &MaskedMatrix) -> (DMatrix<f64>, Diagnostics) {
    let mut values = super::init_completion(data, &state.mean);
    for i in 0..data.n_rows() {
        complete_row(state, data, i, &mut values);
    }
    (
        values,
        Diagnostics {
            sweeps: 1,
            converged: true,
            ..Diagnostics::default()
        },
    )
}
