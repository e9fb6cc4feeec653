//! Mean imputation: fill each missing cell with the arithmetic mean of the
//! column's observed training entries.

use nalgebra::DMatrix;

use crate::data::MaskedMatrix;
use crate::impute::{init_completion, Diagnostics};

pub struct MeanState {
    pub(super) means: Vec<f64>,
}

pub(super) fn fit(train: &MaskedMatrix) -> (MeanState, DMatrix<f64>, Diagnostics) {
    let means = super::observed_means(train);
    let values = init_completion(train, &means);
    let state = MeanState { means };
    (
        state,
        values,
        Diagnostics {
            sweeps: 1,
            converged: true,
            ..Diagnostics::default()
        },
    )
}

pub(super) fn transform(state: &MeanState, data: &MaskedMatrix) -> (DMatrix<f64>, Diagnostics) {
    (
        init_completion(data, &state.means),
        Diagnostics {
            sweeps: 1,
            converged: true,
            ..Diagnostics::default()
        },
    )
}
