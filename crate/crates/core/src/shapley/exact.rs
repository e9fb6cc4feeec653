//! Exact Shapley values by subset enumeration.

use crate::error::Result;
use crate::shapley::value::{FeatureGroups, ValueFunction};
use crate::shapley::weights::CoalitionWeights;

/// Exact attribution of `row` for every player in `groups`:
/// `phi_i = sum over S subset of P \ {i} of w(|S|) [v(S u {i}) - v(S)]`.
///
/// Every coalition value is computed once and cached, so the cost is
/// `2^players` value-function evaluations. Returns one attribution vector
/// per model output (length 1 for regression, one per class otherwise).
pub fn exact_shapley(
    vf: &ValueFunction<'_>,
    groups: &FeatureGroups,
    row: &[f64],
) -> Result<Vec<Vec<f64>>> {
    vf.validate(groups, row)?;
    let g = groups.n_players();
    let weights = CoalitionWeights::new(g)?;
    let n_outputs = vf.n_outputs();

    let mut cache: Vec<Vec<f64>> = Vec::with_capacity(1 << g);
    for mask in 0..(1u32 << g) {
        cache.push(vf.eval(groups, row, mask)?);
    }

    let mut phi = vec![vec![0.0; g]; n_outputs];
    for player in 0..g {
        let bit = 1u32 << player;
        for mask in 0..(1u32 << g) {
            if mask & bit != 0 {
                continue;
            }
            let w = weights.weight(mask.count_ones() as usize);
            let with = &cache[(mask | bit) as usize];
            let without = &cache[mask as usize];
            for out in 0..n_outputs {
                phi[out][player] += w * (with[out] - without[out]);
            }
        }
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::model::{LinearModel, Predictor};

    /// Two-feature product model for the hand-enumerated oracle.
    struct Product;

    impl Predictor for Product {
        fn n_features(&self) -> usize {
            2
        }
        fn n_outputs(&self) -> usize {
            1
        }
        fn predict_row(&self, row: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![row[0] * row[1]])
        }
    }

    #[test]
    fn product_model_splits_credit_in_half() {
        // Hand enumeration with background (0,0) and row (1,1):
        //   phi_1 = w(0)[v({1}) - v({})] + w(1)[v({1,2}) - v({2})]
        //         = 0.5 (0 - 0) + 0.5 (1 - 0) = 0.5, symmetric for phi_2.
        let background = vec![vec![0.0, 0.0]];
        let vf = ValueFunction::Marginal {
            model: &Product,
            background: &background,
        };
        let phi = exact_shapley(&vf, &FeatureGroups::singletons(2), &[1.0, 1.0]).unwrap();
        assert!((phi[0][0] - 0.5).abs() < 1e-12);
        assert!((phi[0][1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn row_equal_to_background_gets_zero_attribution() {
        let m = LinearModel::from_parts(2.0, vec![1.5, -3.0, 0.25], vec![0.0; 3]);
        let background = vec![vec![0.7, -0.1, 2.0]];
        let vf = ValueFunction::Marginal {
            model: &m,
            background: &background,
        };
        let phi = exact_shapley(&vf, &FeatureGroups::singletons(3), &[0.7, -0.1, 2.0]).unwrap();
        for v in &phi[0] {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn efficiency_holds_for_both_modes() {
        use nalgebra::{DMatrix, DVector};
        let mut rng = crate::rng::StreamRng::new(40);
        let x = DMatrix::from_fn(30, 3, |_, _| rng.standard_normal());
        let y = DVector::from_fn(30, |i, _| {
            1.0 + x[(i, 0)] - 2.0 * x[(i, 1)] + 0.5 * x[(i, 2)] + 0.05 * rng.standard_normal()
        });
        let model = crate::model::fit_linear(&x, &y, 0.0).unwrap();
        let groups = FeatureGroups::singletons(3);
        let row = [0.4, -1.2, 0.9];

        let background = vec![model.feature_means().to_vec()];
        let marginal = ValueFunction::Marginal {
            model: &model,
            background: &background,
        };
        let retrain = ValueFunction::RetrainLinear {
            x: &x,
            y: &y,
            ridge: 0.0,
        };
        for vf in [&marginal, &retrain] {
            let phi = exact_shapley(vf, &groups, &row).unwrap();
            let full = vf.eval(&groups, &row, 0b111).unwrap()[0];
            let empty = vf.eval(&groups, &row, 0).unwrap()[0];
            let total: f64 = phi[0].iter().sum();
            assert!(
                (total - (full - empty)).abs() < 1e-8,
                "efficiency residual {}",
                (total - (full - empty)).abs()
            );
        }
    }

    #[test]
    fn grouped_attribution_of_linear_model_sums_member_contributions() {
        let m = LinearModel::from_parts(0.0, vec![1.0, 2.0, 4.0, 8.0], vec![0.0; 4]);
        let background = vec![vec![0.0; 4]];
        let vf = ValueFunction::Marginal {
            model: &m,
            background: &background,
        };
        let groups = FeatureGroups::contiguous(4, 2).unwrap();
        let phi = exact_shapley(&vf, &groups, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!((phi[0][0] - 3.0).abs() < 1e-12);
        assert!((phi[0][1] - 12.0).abs() < 1e-12);
    }

    #[test]
    fn retrain_mode_rejects_wide_feature_spaces() {
        use nalgebra::{DMatrix, DVector};
        let x = DMatrix::zeros(5, 11);
        let y = DVector::zeros(5);
        let vf = ValueFunction::RetrainLinear {
            x: &x,
            y: &y,
            ridge: 1.0,
        };
        let err = exact_shapley(&vf, &FeatureGroups::singletons(11), &[0.0; 11]).unwrap_err();
        assert!(matches!(err, Error::RetrainUnsupported(_)));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let m = LinearModel::from_parts(0.0, vec![0.0; 17], vec![0.0; 17]);
        let background = vec![vec![0.0; 17]];
        let vf = ValueFunction::Marginal {
            model: &m,
            background: &background,
        };
        let err = exact_shapley(&vf, &FeatureGroups::singletons(17), &[0.0; 17]).unwrap_err();
        assert!(matches!(err, Error::CoalitionLimit { .. }));
    }
}
