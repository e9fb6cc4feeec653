//! Acceptance suite: every release-gating criterion at its stated
//! tolerance, one printed pass/fail line per criterion.
//!
//! Run with `cargo test -p shapbench-cli --test acceptance -- --nocapture`
//! to see the lines.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use shapbench_cli::config::{DatasetConfig, Downstream, ExperimentConfig, MethodName};
use shapbench_cli::runner;
use shapbench_core::data::{apply_mcar, split, SplitSpec, Task};
use shapbench_core::impute::{
    self, DimvParams, ImputerSpec, Method, MiceParams, MissForestParams, SoftImputeParams,
};
use shapbench_core::metrics::Criteria;
use shapbench_core::model::{
    fit_gbt_regression, GbtParams, LinearModel, RegressionTree,
};
use shapbench_core::rng::{derive_seed, StreamRng};
use shapbench_core::shapley::{exact_shapley, linear_shapley, FeatureGroups, ValueFunction};
use shapbench_core::theory::{check_theorem1, check_variance_shrink, cov_delta, synthetic_univariate};

fn report(id: u32, name: &str, pass: bool, detail: &str, elapsed: Duration, budget: Duration) {
    println!(
        "ACCEPTANCE {id} [{name}]: {} ({detail}) in {:.2}s (budget {:.0}s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(
        elapsed <= budget,
        "criterion {id} exceeded its runtime budget: {elapsed:?} > {budget:?}"
    );
}

fn data_path(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(file)
}

#[test]
fn acceptance_1_vanishing_attribution_grid() {
    let start = Instant::now();
    let rates = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8];
    let mut worst_shap = 0.0_f64;
    let mut worst_importance = 0.0_f64;
    let mut checks = 0usize;

    for seed in 0..5_u64 {
        // n = 200 training samples of y = 2x + noise, plus a test side.
        let data = synthetic_univariate(280, 1000 + seed);
        let (train, test) = split(
            &data,
            &SplitSpec {
                test_fraction: 80.0 / 280.0,
                seed,
            },
        )
        .unwrap();
        assert_eq!(train.n_rows(), 200);
        for (i, &train_rate) in rates.iter().enumerate() {
            for (j, &test_rate) in rates.iter().enumerate() {
                let cell = derive_seed(seed, "acc1", (i * 8 + j) as u64);
                let masked_train = apply_mcar(&train, train_rate, cell).unwrap();
                let masked_test = apply_mcar(&test, test_rate, cell ^ 1).unwrap();
                let r = check_theorem1(&masked_train, &masked_test).unwrap();
                worst_shap = worst_shap.max(r.max_abs_shap_on_imputed);
                worst_importance =
                    worst_importance.max((r.importance_full - r.importance_observed_only).abs());
                checks += 1;
            }
        }
    }

    let pass = worst_shap < 1e-10 && worst_importance < 1e-12;
    report(
        1,
        "vanishing attribution on imputed test entries",
        pass,
        &format!(
            "{checks} grid cells, max |phi'| on imputed = {worst_shap:.2e}, \
             max importance residual = {worst_importance:.2e}"
        ),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn acceptance_2_covariance_delta_identity() {
    let start = Instant::now();
    let mut rng = StreamRng::new(77);
    let mut worst = 0.0_f64;
    for _ in 0..1000 {
        let n = 2 + rng.below(99);
        let x: Vec<f64> = (0..n).map(|_| rng.standard_normal() * 3.0).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.standard_normal() * 2.0).collect();
        let i = rng.below(n);
        let r = cov_delta(&x, &y, i).unwrap();
        worst = worst.max((r.direct_delta - r.formula_delta).abs());
    }
    report(
        2,
        "single-point covariance delta",
        worst < 1e-12,
        &format!("1000 random triples, worst residual {worst:.2e}"),
        start.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn acceptance_3_shapley_axioms() {
    let start = Instant::now();
    let mut rng = StreamRng::new(303);
    let mut worst_efficiency = 0.0_f64;
    let mut worst_symmetry = 0.0_f64;

    // 100 random linear models, marginal mode: efficiency, dummy, symmetry.
    for _ in 0..100 {
        let p = 3 + rng.below(6); // 3..=8
        let mut coeffs: Vec<f64> = (0..p).map(|_| rng.standard_normal() * 2.0).collect();
        let mut means: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
        let mut row: Vec<f64> = (0..p).map(|_| rng.standard_normal() * 1.5).collect();
        // Symmetric pair (0, 1): equal coefficient, row value, background
        // value. The dummy feature is drawn outside the pair.
        coeffs[1] = coeffs[0];
        means[1] = means[0];
        row[1] = row[0];
        let dummy = 2 + rng.below(p - 2);
        coeffs[dummy] = 0.0;
        let model = LinearModel::from_parts(rng.standard_normal(), coeffs, means.clone());
        let background = vec![means];
        let vf = ValueFunction::Marginal {
            model: &model,
            background: &background,
        };
        let groups = FeatureGroups::singletons(p);
        let phi = exact_shapley(&vf, &groups, &row).unwrap();
        let full = vf.eval(&groups, &row, (1u32 << p) - 1).unwrap()[0];
        let empty = vf.eval(&groups, &row, 0).unwrap()[0];
        worst_efficiency =
            worst_efficiency.max((phi[0].iter().sum::<f64>() - (full - empty)).abs());
        assert_eq!(phi[0][dummy], 0.0, "dummy axiom violated");
        worst_symmetry = worst_symmetry.max((phi[0][0] - phi[0][1]).abs());
    }

    // Retrain mode on 20 random linear-family datasets: efficiency.
    for k in 0..20 {
        let p = 2 + (k % 5); // 2..=6
        let n = 40;
        let x = DMatrix::from_fn(n, p, |_, _| rng.standard_normal());
        let y = DVector::from_fn(n, |i, _| {
            (0..p).map(|j| x[(i, j)] * (j as f64 - 1.0)).sum::<f64>()
                + 0.1 * rng.standard_normal()
        });
        let vf = ValueFunction::RetrainLinear {
            x: &x,
            y: &y,
            ridge: 1e-9,
        };
        let groups = FeatureGroups::singletons(p);
        let row: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
        let phi = exact_shapley(&vf, &groups, &row).unwrap();
        let full = vf.eval(&groups, &row, (1u32 << p) - 1).unwrap()[0];
        let empty = vf.eval(&groups, &row, 0).unwrap()[0];
        worst_efficiency =
            worst_efficiency.max((phi[0].iter().sum::<f64>() - (full - empty)).abs());
    }

    // 20 random boosted-tree models: efficiency, dummy (constant feature is
    // never split on), symmetry (feature-swapped ensemble doubling).
    for k in 0..20_u64 {
        let p = 3 + (k as usize % 6); // 3..=8
        let n = 60;
        let x = DMatrix::from_fn(n, p, |_, j| {
            if j == p - 1 {
                1.0 // constant column: the dummy feature
            } else {
                rng.standard_normal()
            }
        });
        let y = DVector::from_fn(n, |i, _| {
            x[(i, 0)].sin() + if p > 1 { x[(i, 1)] } else { 0.0 } + 0.1 * rng.standard_normal()
        });
        let model = fit_gbt_regression(
            &x,
            &y,
            &GbtParams {
                n_trees: 12,
                max_depth: 3,
                learning_rate: 0.3,
                min_samples_leaf: 2,
                seed: k,
            },
        )
        .unwrap();

        let background = vec![vec![0.0; p]];
        let groups = FeatureGroups::singletons(p);
        let mut row: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
        row[1] = row[0];

        let vf = ValueFunction::Marginal {
            model: &model,
            background: &background,
        };
        let phi = exact_shapley(&vf, &groups, &row).unwrap();
        let full = vf.eval(&groups, &row, (1u32 << p) - 1).unwrap()[0];
        let empty = vf.eval(&groups, &row, 0).unwrap()[0];
        worst_efficiency =
            worst_efficiency.max((phi[0].iter().sum::<f64>() - (full - empty)).abs());
        assert_eq!(phi[0][p - 1], 0.0, "constant feature must be a dummy");

        // Symmetrized ensemble: trees plus their (0 <-> 1)-swapped copies
        // make the model invariant under swapping features 0 and 1.
        let swap = |j: usize| match j {
            0 => 1,
            1 => 0,
            other => other,
        };
        let mut doubled: Vec<RegressionTree> = model.trees()[0].clone();
        doubled.extend(model.trees()[0].iter().map(|t| t.map_features(swap)));
        let sym_model = model.with_trees(vec![doubled]);
        let vf_sym = ValueFunction::Marginal {
            model: &sym_model,
            background: &background,
        };
        let phi_sym = exact_shapley(&vf_sym, &groups, &row).unwrap();
        worst_symmetry = worst_symmetry.max((phi_sym[0][0] - phi_sym[0][1]).abs());
    }

    let pass = worst_efficiency < 1e-8 && worst_symmetry < 1e-10;
    report(
        3,
        "efficiency / dummy / symmetry axioms",
        pass,
        &format!(
            "worst efficiency residual {worst_efficiency:.2e}, worst symmetry gap {worst_symmetry:.2e}"
        ),
        start.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn acceptance_4_closed_form_equals_enumeration() {
    let start = Instant::now();
    let mut rng = StreamRng::new(404);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let p = 1 + rng.below(8); // 1..=8
        let coeffs: Vec<f64> = (0..p).map(|_| rng.standard_normal() * 2.0).collect();
        let means: Vec<f64> = (0..p).map(|_| rng.standard_normal()).collect();
        let model = LinearModel::from_parts(rng.standard_normal(), coeffs, means.clone());
        let row: Vec<f64> = (0..p).map(|_| rng.standard_normal() * 1.5).collect();

        let closed = linear_shapley(&model, &row).unwrap();
        let background = vec![means];
        let vf = ValueFunction::Marginal {
            model: &model,
            background: &background,
        };
        let enumerated = exact_shapley(&vf, &FeatureGroups::singletons(p), &row).unwrap();
        for j in 0..p {
            worst = worst.max((closed[j] - enumerated[0][j]).abs());
        }
    }
    report(
        4,
        "closed form vs enumeration",
        worst < 1e-10,
        &format!("100 random linear models, worst gap {worst:.2e}"),
        start.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn acceptance_5_imputer_properties() {
    let start = Instant::now();
    let mut details = Vec::new();

    let mut rng = StreamRng::new(505);
    let values = DMatrix::from_fn(40, 5, |_, j| rng.standard_normal() + j as f64 * 0.3);
    let names = (0..5).map(|j| format!("f{j}")).collect();
    let data = shapbench_core::data::DataMatrix::new(
        values,
        DVector::zeros(40),
        names,
        Task::Regression,
    )
    .unwrap();
    let masked = apply_mcar(&data, 0.3, 55).unwrap();
    let complete = apply_mcar(&data, 0.0, 55).unwrap();

    let specs = [
        ImputerSpec::new(Method::Mean, 1).unwrap(),
        ImputerSpec::new(Method::Mice(MiceParams::default()), 1).unwrap(),
        ImputerSpec::new(Method::Dimv(DimvParams::default()), 1).unwrap(),
        ImputerSpec::new(Method::MissForest(MissForestParams::default()), 1).unwrap(),
        ImputerSpec::new(Method::SoftImpute(SoftImputeParams::default()), 1).unwrap(),
    ];

    // Pass-through exactness for every method, fit and transform sides.
    for spec in &specs {
        let f = impute::fit(spec, &masked).unwrap();
        let t = f.transform(&masked).unwrap();
        for i in 0..40 {
            for j in 0..5 {
                if let Some(v) = masked.get(i, j) {
                    assert_eq!(f.train_imputed().values()[(i, j)].to_bits(), v.to_bits());
                    assert_eq!(t.values()[(i, j)].to_bits(), v.to_bits());
                }
            }
        }
    }
    details.push("pass-through bit-exact (5 methods)".to_string());

    // Mean imputation: mean preservation and variance shrinkage against
    // the sequestered ground truth.
    {
        let f = impute::fit(&ImputerSpec::mean(), &masked).unwrap();
        let completed = f.train_imputed().values();
        let mut worst_mean_gap = 0.0_f64;
        for j in 0..5 {
            let obs: Vec<f64> = (0..40).filter_map(|i| masked.get(i, j)).collect();
            let obs_mean = obs.iter().sum::<f64>() / obs.len() as f64;
            let col_mean = completed.column(j).sum() / 40.0;
            worst_mean_gap = worst_mean_gap.max((obs_mean - col_mean).abs());
            let shrink = check_variance_shrink(&masked, j, f.train_imputed()).unwrap();
            assert!(shrink.pass, "variance shrink failed on column {j}: {shrink:?}");
        }
        assert!(worst_mean_gap < 1e-12, "mean preservation gap {worst_mean_gap}");
        details.push(format!("mean preservation gap {worst_mean_gap:.1e}, Var(x') <= Var(x)"));
    }

    // Soft-thresholded SVD objective is non-increasing.
    {
        let f = impute::fit(&specs[4], &masked).unwrap();
        let trace = &f.train_imputed().diagnostics().objective_trace;
        assert!(trace.len() >= 2);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()), "objective rose");
        }
        details.push(format!("objective monotone over {} iterations", trace.len()));
    }

    // Rank-1 recovery with zero shrinkage and a rank cap.
    {
        let u = [1.0, 2.0, 3.0, 4.0, 5.0];
        let v = [2.0, 1.0, 3.0, 1.0, 2.0];
        let full = DMatrix::from_fn(5, 5, |i, j| u[i] * v[j]);
        let names = (0..5).map(|j| format!("c{j}")).collect();
        let rank1 = shapbench_core::data::DataMatrix::new(
            full.clone(),
            DVector::zeros(5),
            names,
            Task::Regression,
        )
        .unwrap();
        let mask = shapbench_core::data::mask_from_csv(std::io::BufReader::new(
            "1,0,1,1,1\n1,1,1,1,1\n1,1,1,0,1\n1,1,1,1,1\n0,1,1,1,1\n".as_bytes(),
        ))
        .unwrap();
        let masked1 = shapbench_core::data::masked_from_parts(&rank1, mask).unwrap();
        let spec = ImputerSpec::new(
            Method::SoftImpute(SoftImputeParams {
                lambda: Some(0.0),
                tol: 1e-10,
                max_iters: 500,
                max_rank: Some(1),
            }),
            0,
        )
        .unwrap();
        let f = impute::fit(&spec, &masked1).unwrap();
        let mut worst = 0.0_f64;
        for (i, j) in [(0, 1), (2, 3), (4, 0)] {
            worst = worst.max((f.train_imputed().values()[(i, j)] - full[(i, j)]).abs());
        }
        assert!(worst < 1e-6, "rank-1 recovery error {worst}");
        details.push(format!("rank-1 recovery error {worst:.1e}"));
    }

    // Chained-equation and forest imputers are the identity on complete
    // data.
    for spec in [&specs[1], &specs[3]] {
        let f = impute::fit(spec, &complete).unwrap();
        let t = f.transform(&complete).unwrap();
        for (a, b) in complete
            .values_with_nans()
            .iter()
            .zip(t.values().iter())
        {
            assert_eq!(a, b);
        }
        assert_eq!(f.train_imputed().diagnostics().sweeps, 0);
    }
    details.push("identity on complete data".to_string());

    report(
        5,
        "imputer properties",
        true,
        &details.join("; "),
        start.elapsed(),
        Duration::from_secs(60),
    );
}

fn base_config(dataset: &str, path: PathBuf, task: Task, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.datasets = vec![DatasetConfig {
        name: dataset.to_string(),
        path,
        target: match task {
            Task::Regression => "y".into(),
            Task::Classification => "class".into(),
        },
        task,
    }];
    cfg.output_dir = out.to_path_buf();
    cfg.jobs = 2;
    cfg
}

fn non_decreasing_steps(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] >= w[0] - 1e-12).count()
}

#[test]
fn acceptance_6_mean_imputation_degrades_with_rate() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(
        "diabetes",
        data_path("diabetes_style.csv"),
        Task::Regression,
        tmp.path(),
    );
    cfg.rates = vec![0.2, 0.4, 0.6, 0.8];
    cfg.methods = vec![MethodName::Mean];
    cfg.repetitions = 10;
    cfg.base_seed = 606;
    cfg.downstream = Downstream::Linear;

    let run = runner::run(&cfg).unwrap();
    let series = |criteria: Criteria| -> Vec<f64> {
        cfg.rates
            .iter()
            .map(|&r| {
                run.cells
                    .iter()
                    .find(|c| c.rate == r && c.criteria == criteria)
                    .unwrap_or_else(|| panic!("missing cell at rate {r}"))
                    .value
            })
            .collect()
    };
    let mse = series(Criteria::PredictionMse);
    let mse_shap = series(Criteria::MseShap);
    let mse_steps = non_decreasing_steps(&mse);
    let shap_steps = non_decreasing_steps(&mse_shap);

    // 4 rates give 3 consecutive steps per metric; the trend criterion
    // allows one violation per metric.
    let pass = mse_steps >= 2 && shap_steps >= 2;
    report(
        6,
        "mean-imputation degradation trend",
        pass,
        &format!(
            "10-seed averages: mse {mse:?} ({mse_steps}/3 non-decreasing), \
             mse_shap {mse_shap:?} ({shap_steps}/3 non-decreasing)"
        ),
        start.elapsed(),
        Duration::from_secs(300),
    );
}

#[test]
fn acceptance_7_native_gbt_explanation_divergence_soft_check() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = base_config(
        "glass",
        data_path("glass_style.csv"),
        Task::Classification,
        tmp.path(),
    );
    cfg.rates = vec![0.2, 0.4, 0.6];
    cfg.methods = vec![
        MethodName::GbtNative,
        MethodName::Mean,
        MethodName::Mice,
        MethodName::Dimv,
        MethodName::MissForest,
        MethodName::SoftImpute,
    ];
    cfg.repetitions = 5;
    cfg.base_seed = 707;
    cfg.downstream = Downstream::Linear;
    cfg.explain_cap = 20;
    cfg.gbt.n_trees = 40;
    cfg.missforest.n_trees = 15;
    cfg.missforest.max_depth = 6;

    let run = runner::run(&cfg).unwrap();
    let shap_cell = |method: &str, rate: f64| -> &shapbench_core::metrics::MetricCell {
        run.cells
            .iter()
            .find(|c| c.method == method && c.rate == rate && c.criteria == Criteria::MseShap)
            .unwrap_or_else(|| panic!("missing mse_shap cell {method}@{rate}"))
    };

    let mut per_rate = Vec::new();
    let mut majority_everywhere = true;
    for &rate in &cfg.rates {
        let native = shap_cell("gbt_native", rate);
        let mut wins = 0;
        for rep in 0..cfg.repetitions {
            let native_v = native.per_repetition[rep];
            let all_below = ["mean", "mice", "dimv", "missforest", "softimpute"]
                .iter()
                .all(|m| shap_cell(m, rate).per_repetition[rep] < native_v);
            if all_below {
                wins += 1;
            }
        }
        majority_everywhere &= wins * 2 > cfg.repetitions;
        per_rate.push(format!("r={rate}: {wins}/{} seeds", cfg.repetitions));
    }

    // Soft check: reported, not gated. The suite only asserts the cells
    // were produced.
    println!(
        "ACCEPTANCE 7 [native-missing GBT divergence, soft]: {} ({})",
        if majority_everywhere {
            "OBSERVED"
        } else {
            "NOT OBSERVED"
        },
        per_rate.join(", ")
    );
    assert!(!run.cells.is_empty());
    println!(
        "ACCEPTANCE 7 runtime {:.2}s (reported only)",
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn acceptance_8_end_to_end_determinism() {
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();

    // Exercise the config-file path exactly as a user would.
    let cfg_text = format!(
        "dataset.diabetes.path = {}\n\
         dataset.diabetes.target = y\n\
         dataset.diabetes.task = regression\n\
         rates = 0.2, 0.5\n\
         methods = mean, softimpute, gbt_native\n\
         repetitions = 2\n\
         base_seed = 808\n\
         shapley.explain_cap = 15\n\
         gbt.n_trees = 10\n",
        data_path("diabetes_style.csv").display()
    );
    let cfg_path = tmp.path().join("det.cfg");
    std::fs::write(&cfg_path, cfg_text).unwrap();

    let mut outputs = Vec::new();
    for run_idx in 0..2 {
        let mut cfg = ExperimentConfig::load(&cfg_path).unwrap();
        cfg.output_dir = tmp.path().join(format!("out{run_idx}"));
        let report = runner::run(&cfg).unwrap();
        outputs.push((cfg.output_dir.clone(), report.outputs));
    }

    assert_eq!(outputs[0].1, outputs[1].1, "output manifests differ");
    let mut compared = 0;
    for rel in &outputs[0].1 {
        let a = std::fs::read(outputs[0].0.join(rel)).unwrap();
        let b = std::fs::read(outputs[1].0.join(rel)).unwrap();
        assert_eq!(a, b, "output {rel} differs between identical runs");
        compared += 1;
    }
    report_8(compared, start.elapsed());
}

fn report_8(files: usize, elapsed: Duration) {
    println!(
        "ACCEPTANCE 8 [byte-identical reruns]: PASS ({files} files compared) in {:.2}s",
        elapsed.as_secs_f64()
    );
    assert!(files > 0);
}
