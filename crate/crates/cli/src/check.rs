//! The identity-check suite behind `shapbench check`: runs every
//! closed-form check on synthetic data and reports a flat pass/fail table
//! plus the descriptive rate-sweep.

use std::path::Path;

use anyhow::Context;
use shapbench_core::data::{apply_mcar, split, SplitSpec};
use shapbench_core::impute::{self, ImputerSpec};
use shapbench_core::model::fit_linear;
use shapbench_core::rng::{derive_seed, StreamRng};
use shapbench_core::theory::{
    check_theorem1, check_variance_shrink, cov_delta, shap_mean_identity, synthetic_univariate,
    trend_sweep, write_check_csv, CheckRow, TrendPoint,
};

pub struct CheckOutcome {
    pub rows: Vec<CheckRow>,
    pub trend: Vec<TrendPoint>,
}

impl CheckOutcome {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

const GRID_RATES: [f64; 8] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];

/// Run the whole suite: the vanishing-attribution identity over the full
/// train-rate x test-rate grid, the covariance-delta identity over random
/// triples, variance shrinkage, and the attribution-mean identity.
pub fn run_checks(base_seed: u64, grid_seeds: usize) -> anyhow::Result<CheckOutcome> {
    let mut rows = Vec::new();

    // Vanishing attribution + importance restriction over the rate grid.
    for seed_idx in 0..grid_seeds.max(1) {
        let seed = derive_seed(base_seed, "check-theorem", seed_idx as u64);
        let data = synthetic_univariate(280, seed);
        let (train, test) = split(
            &data,
            &SplitSpec {
                test_fraction: 0.3,
                seed,
            },
        )?;
        for (i, &train_rate) in GRID_RATES.iter().enumerate() {
            for (j, &test_rate) in GRID_RATES.iter().enumerate() {
                let cell = derive_seed(seed, "cell", (i * GRID_RATES.len() + j) as u64);
                let masked_train = apply_mcar(&train, train_rate, cell)?;
                let masked_test = apply_mcar(&test, test_rate, cell ^ 1)?;
                let report = check_theorem1(&masked_train, &masked_test)?;
                rows.push(report.to_row(&format!(
                    "seed={seed_idx} train_rate={train_rate} test_rate={test_rate}"
                )));
            }
        }
    }

    // Covariance delta on 1000 random (x, y, i) triples, N in [2, 100].
    let mut rng = StreamRng::derived(base_seed, "check-cov", 0);
    let mut worst = 0.0_f64;
    let mut all_pass = true;
    for _ in 0..1000 {
        let n = 2 + rng.below(99);
        let x: Vec<f64> = (0..n).map(|_| rng.standard_normal() * 2.5).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.standard_normal() * 1.5).collect();
        let i = rng.below(n);
        let r = cov_delta(&x, &y, i)?;
        worst = worst.max((r.direct_delta - r.formula_delta).abs());
        all_pass &= r.pass;
    }
    rows.push(CheckRow {
        check: "covariance_delta".into(),
        params: "1000 random triples, n in [2, 100]".into(),
        residual: worst,
        pass: all_pass,
    });

    // Variance shrinkage under mean imputation.
    for (k, rate) in [0.0, 0.3, 0.6].into_iter().enumerate() {
        let seed = derive_seed(base_seed, "check-var", k as u64);
        let data = synthetic_univariate(150, seed);
        let masked = apply_mcar(&data, rate, seed)?;
        let impinted = impute::fit(&ImputerSpec::mean(), &masked)?;
        let report = check_variance_shrink(&masked, 0, impinted.train_imputed())?;
        rows.push(report.to_row(&format!("rate={rate}")));
    }

    // Attribution-mean identity on a multivariate linear model.
    {
        let mut rng = StreamRng::derived(base_seed, "check-mean-id", 0);
        let x = nalgebra::DMatrix::from_fn(120, 4, |_, _| rng.standard_normal());
        let y = nalgebra::DVector::from_fn(120, |i, _| {
            x[(i, 0)] * 2.0 - x[(i, 2)] + 0.1 * rng.standard_normal()
        });
        let model = fit_linear(&x, &y, 0.0)?;
        let shifted = nalgebra::DMatrix::from_fn(50, 4, |_, _| rng.standard_normal() + 0.8);
        let residuals = shap_mean_identity(&model, &shifted)?;
        let worst = residuals.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
        rows.push(CheckRow {
            check: "attribution_mean_identity".into(),
            params: "4 features, shifted explained set".into(),
            residual: worst,
            pass: worst < 1e-12,
        });
    }

    // Descriptive sweep (reported, not gated).
    let trend = trend_sweep(200, 80, &GRID_RATES, derive_seed(base_seed, "trend", 0))?;

    Ok(CheckOutcome { rows, trend })
}

pub fn write_outputs(outcome: &CheckOutcome, dir: &Path) -> anyhow::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut checks = Vec::new();
    write_check_csv(&mut checks, &outcome.rows)?;
    std::fs::write(dir.join("theory_checks.csv"), &checks)
        .with_context(|| format!("writing {}", dir.join("theory_checks.csv").display()))?;

    let mut sweep = String::from(
        "train_rate,test_rate,seed,importance_original,importance_imputed,max_point_ratio,theorem_pass\n",
    );
    for p in &outcome.trend {
        sweep.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.train_rate,
            p.test_rate,
            p.seed,
            p.importance_original,
            p.importance_imputed,
            p.max_point_ratio,
            p.theorem_pass
        ));
    }
    std::fs::write(dir.join("trend_sweep.csv"), sweep)?;
    Ok(vec!["theory_checks.csv".into(), "trend_sweep.csv".into()])
}

/// 0 when every gated check passed, 1 otherwise.
pub fn exit_code(outcome: &CheckOutcome) -> i32 {
    i32::from(!outcome.all_pass())
}
