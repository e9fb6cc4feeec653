//! Closed-form Shapley values for linear models.
//!
//! For `f(x) = b0 + sum_j beta_j x_j` explained against the training mean,
//! the attribution of feature `j` is `(x_j - mean_j) beta_j`. This is the
//! value exact enumeration produces in marginal mode with the mean row as
//! the single background, and the regime in which the vanishing-attribution
//! identity checks of [`crate::theory`] are sharp.

use crate::error::{Error, Result};
use crate::model::LinearModel;
use crate::shapley::value::FeatureGroups;

/// `phi_j = (row_j - feature_mean_j) * beta_j`; rejects missing entries.
pub fn linear_shapley(model: &LinearModel, row: &[f64]) -> Result<Vec<f64>> {
    if row.len() != model.n_features() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} features", model.n_features()),
            got: format!("{}", row.len()),
        });
    }
    if let Some(idx) = row.iter().position(|v| v.is_nan()) {
        return Err(Error::MissingValueForLinearModel(idx));
    }
    Ok(row
        .iter()
        .zip(model.feature_means())
        .zip(model.coefficients())
        .map(|((x, mean), beta)| (x - mean) * beta)
        .collect())
}

/// Grouped closed form: the attribution of a player is the sum of its
/// members' closed-form attributions (linear value functions make group
/// contributions additive).
pub fn linear_shapley_grouped(
    model: &LinearModel,
    row: &[f64],
    groups: &FeatureGroups,
) -> Result<Vec<f64>> {
    let per_feature = linear_shapley(model, row)?;
    Ok((0..groups.n_players())
        .map(|g| groups.members(g).iter().map(|&j| per_feature[j]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapley::{exact_shapley, ValueFunction};

    #[test]
    fn direct_formula() {
        let m = LinearModel::from_parts(0.0, vec![2.0], vec![1.0]);
        let phi = linear_shapley(&m, &[3.0]).unwrap();
        assert_eq!(phi, vec![4.0]);
    }

    #[test]
    fn row_at_the_mean_has_zero_attribution() {
        let m = LinearModel::from_parts(5.0, vec![2.0, -1.0], vec![1.0, 4.0]);
        let phi = linear_shapley(&m, &[1.0, 4.0]).unwrap();
        assert_eq!(phi, vec![0.0, 0.0]);
    }

    #[test]
    fn missing_entry_is_rejected() {
        let m = LinearModel::from_parts(0.0, vec![1.0], vec![0.0]);
        assert!(matches!(
            linear_shapley(&m, &[f64::NAN]),
            Err(Error::MissingValueForLinearModel(0))
        ));
    }

    #[test]
    fn matches_enumeration_with_mean_background() {
        let mut rng = crate::rng::StreamRng::new(51);
        for trial in 0..10 {
            let p = 6;
            let coeffs: Vec<f64> = (0..p).map(|_| rng.standard_normal() * 2.0).collect();
            let means: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
            let m = LinearModel::from_parts(rng.standard_normal(), coeffs, means.clone());
            let row: Vec<f64> = (0..p).map(|_| rng.standard_normal() * 1.5).collect();

            let closed = linear_shapley(&m, &row).unwrap();
            let background = vec![means];
            let vf = ValueFunction::Marginal {
                model: &m,
                background: &background,
            };
            let enumerated =
                exact_shapley(&vf, &FeatureGroups::singletons(p), &row).unwrap();
            for j in 0..p {
                assert!(
                    (closed[j] - enumerated[0][j]).abs() < 1e-10,
                    "trial {trial} feature {j}: {} vs {}",
                    closed[j],
                    enumerated[0][j]
                );
            }
        }
    }
}
