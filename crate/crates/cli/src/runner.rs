//! Config-driven experiment engine.
//!
//! For each repetition: split, standardize, mask train and test at each
//! rate, then per method either impute-and-fit the downstream model or fit
//! the native-missing boosted trees, explain the test rows, and score the
//! cell against the reference pipeline fit on the original complete data.
//! Cells aggregate over repetitions into the wide and long tables; rep-0
//! attributions feed the per-cell exports and plots.
//!
//! Every seed is derived from `(base_seed, dataset name, repetition)` plus
//! a purpose label, never from list positions, so removing a method or a
//! rate from the config leaves every other cell byte-identical.

use std::collections::BTreeMap;


use anyhow::{anyhow, bail, Context};
use nalgebra::{DMatrix, DVector};

use shapbench_core::data::{
    apply_mcar, load_csv, split, DataMatrix, MaskedMatrix, SplitSpec, Standardizer, Task,
};
use shapbench_core::impute::{self, ImputerSpec, Method};
use shapbench_core::metrics::{self, Criteria, MetricCell};
use shapbench_core::model::{
    fit_gbt_classification, fit_gbt_regression, fit_linear, fit_linear_ovr, GbtModel,
    LinearModel, LinearOvrModel,
};
use shapbench_core::rng::derive_seed;
use shapbench_core::shapley::{
    beeswarm_table, exact_shapley, group_values, write_shapley_csv, FeatureGroups, ShapleyMatrix,
    ValueFunction,
};

use crate::config::{
    BackgroundKind, DatasetConfig, Downstream, ExperimentConfig, MethodName, ShapMode,
};
use crate::plots;

/// Outcome of one metric in one (dataset, rate, method, repetition) slot.
#[derive(Debug, Clone)]
enum Slot {
    Value(f64),
    /// Structurally undefined (e.g. imputation MSE without an imputation
    /// step); rendered as a marker, not an error.
    NotApplicable,
    Failed(String),
}

#[derive(Debug, Clone)]
struct CellSlots {
    mse: Slot,
    mse_shap: Slot,
}

struct ContextOut {
    d_idx: usize,
    rep: usize,
    seed: u64,
    cells: Vec<Vec<CellSlots>>,
    exports: Vec<(String, Vec<u8>)>,
    cap_hit: bool,
}

#[derive(Debug, Clone)]
pub struct UnavailableCell {
    pub dataset: String,
    pub rate: f64,
    pub method: String,
    pub criteria: String,
    pub reason: String,
}

#[derive(Debug)]
pub struct RunReport {
    pub cells: Vec<MetricCell>,
    pub unavailable: Vec<UnavailableCell>,
    /// Paths written, relative to the output directory.
    pub outputs: Vec<String>,
}

struct LoadedDataset {
    cfg: DatasetConfig,
    data: DataMatrix,
    n_classes: usize,
}

enum Arm {
    Linear(LinearModel),
    LinearOvr(LinearOvrModel),
    Gbt(GbtModel),
}

impl Arm {
    fn n_outputs(&self) -> usize {
        match self {
            Arm::Linear(_) => 1,
            Arm::LinearOvr(m) => m.n_classes(),
            Arm::Gbt(m) => m.n_outputs(),
        }
    }

    fn feature_means(&self) -> Vec<f64> {
        match self {
            Arm::Linear(m) => m.feature_means().to_vec(),
            Arm::LinearOvr(m) => m.class_model(0).feature_means().to_vec(),
            Arm::Gbt(m) => m.feature_means().to_vec(),
        }
    }

    fn predict(&self, row: &[f64]) -> shapbench_core::Result<Vec<f64>> {
        use shapbench_core::model::Predictor;
        match self {
            Arm::Linear(m) => Predictor::predict_row(m, row),
            Arm::LinearOvr(m) => Predictor::predict_row(m, row),
            Arm::Gbt(m) => Predictor::predict_row(m, row),
        }
    }
}

fn fit_downstream(
    cfg: &ExperimentConfig,
    task: Task,
    n_classes: usize,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
) -> shapbench_core::Result<Arm> {
    match (cfg.downstream, task) {
        (Downstream::Linear, Task::Regression) => Ok(Arm::Linear(fit_linear(x, y, cfg.ridge)?)),
        (Downstream::Linear, Task::Classification) => Ok(Arm::LinearOvr(fit_linear_ovr(
            x, y, n_classes, cfg.ridge,
        )?)),
        (Downstream::Gbt, Task::Regression) => {
            Ok(Arm::Gbt(fit_gbt_regression(x, y, &cfg.gbt)?))
        }
        (Downstream::Gbt, Task::Classification) => Ok(Arm::Gbt(fit_gbt_classification(
            x, y, n_classes, &cfg.gbt,
        )?)),
    }
}

fn background_rows(cfg: &ExperimentConfig, arm: &Arm, p: usize) -> Vec<Vec<f64>> {
    match cfg.background {
        BackgroundKind::TrainMean => vec![arm.feature_means()],
        BackgroundKind::Zero => vec![vec![0.0; p]],
    }
}

/// Group-level missing flags for the explained rows.
fn group_flags(masked: &MaskedMatrix, groups: &FeatureGroups, m_explained: usize) -> Vec<Vec<bool>> {
    (0..m_explained)
        .map(|i| {
            (0..groups.n_players())
                .map(|g| {
                    groups
                        .members(g)
                        .iter()
                        .any(|&j| masked.get(i, j).is_none())
                })
                .collect()
        })
        .collect()
}

fn player_labels(groups: &FeatureGroups, feature_names: &[String]) -> Vec<String> {
    (0..groups.n_players())
        .map(|g| {
            let members = groups.members(g);
            if members.len() == 1 {
                feature_names[members[0]].clone()
            } else {
                format!(
                    "{}..{}",
                    feature_names[members[0]],
                    feature_names[*members.last().unwrap()]
                )
            }
        })
        .collect()
}

/// Explain `rows` (one per explained sample; NaN entries allowed only for
/// boosted-tree arms) and assemble the attribution matrix.
#[allow(clippy::too_many_arguments)]
fn explain_rows(
    cfg: &ExperimentConfig,
    arm: &Arm,
    groups: &FeatureGroups,
    labels: &[String],
    rows: &DMatrix<f64>,
    flags: Vec<Vec<bool>>,
    retrain_ctx: Option<(&DMatrix<f64>, &DVector<f64>)>,
) -> shapbench_core::Result<ShapleyMatrix> {
    let m = rows.nrows();
    let p = rows.ncols();
    let g = groups.n_players();
    let n_outputs = arm.n_outputs();
    let mut stacks = vec![DMatrix::zeros(m, g); n_outputs];

    match (cfg.shap_mode, arm) {
        (ShapMode::Retrain, _) => {
            let (x, y) = retrain_ctx.expect("retrain mode requires a train handle");
            let vf = ValueFunction::RetrainLinear {
                x,
                y,
                ridge: cfg.ridge,
            };
            for i in 0..m {
                let row: Vec<f64> = rows.row(i).iter().copied().collect();
                let phi = exact_shapley(&vf, groups, &row)?;
                for j in 0..g {
                    stacks[0][(i, j)] = phi[0][j];
                }
            }
        }
        (ShapMode::Marginal, Arm::Linear(model)) => {
            // Closed form against the single background row; identical to
            // enumeration for a linear value function.
            let bg = &background_rows(cfg, arm, p)[0];
            for i in 0..m {
                for player in 0..g {
                    let mut total = 0.0;
                    for &j in groups.members(player) {
                        total += (rows[(i, j)] - bg[j]) * model.coefficients()[j];
                    }
                    stacks[0][(i, player)] = total;
                }
            }
        }
        (ShapMode::Marginal, Arm::LinearOvr(model)) => {
            let bg = &background_rows(cfg, arm, p)[0];
            for c in 0..n_outputs {
                let coeffs = model.class_model(c).coefficients();
                for i in 0..m {
                    for player in 0..g {
                        let mut total = 0.0;
                        for &j in groups.members(player) {
                            total += (rows[(i, j)] - bg[j]) * coeffs[j];
                        }
                        stacks[c][(i, player)] = total;
                    }
                }
            }
        }
        (ShapMode::Marginal, Arm::Gbt(model)) => {
            let background = background_rows(cfg, arm, p);
            let vf = ValueFunction::Marginal {
                model,
                background: &background,
            };
            for i in 0..m {
                let row: Vec<f64> = rows.row(i).iter().copied().collect();
                let phi = exact_shapley(&vf, groups, &row)?;
                for c in 0..n_outputs {
                    for j in 0..g {
                        stacks[c][(i, j)] = phi[c][j];
                    }
                }
            }
        }
    }

    ShapleyMatrix::new(stacks, flags, (0..m).collect(), labels.to_vec())
}

/// Restrict a classification attribution matrix to one class stack.
fn restrict_class(sm: &ShapleyMatrix, class: usize) -> ShapleyMatrix {
    let c = class.min(sm.n_outputs() - 1);
    ShapleyMatrix::new(
        vec![sm.stack(c).clone()],
        sm.missing_flags().to_vec(),
        sm.sample_ids().to_vec(),
        sm.player_labels().to_vec(),
    )
    .expect("restriction preserves shape")
}

fn compare_shap(
    cfg: &ExperimentConfig,
    phi: &ShapleyMatrix,
    phi_ref: &ShapleyMatrix,
) -> shapbench_core::Result<f64> {
    match cfg.mse_shap_class {
        Some(c) if phi.n_outputs() > 1 => {
            metrics::mse_shap(&restrict_class(phi, c), &restrict_class(phi_ref, c))
        }
        _ => metrics::mse_shap(phi, phi_ref),
    }
}

/// Rows as the models see them, with NaN replaced by the background mean
/// for display/export purposes only.
fn display_rows(rows: &DMatrix<f64>, fallback: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.nrows(), rows.ncols(), |i, j| {
        let v = rows[(i, j)];
        if v.is_nan() {
            fallback[j]
        } else {
            v
        }
    })
}

struct CellExports {
    shap_csv: Vec<u8>,
    bar_svg: String,
    beeswarm_svg: String,
}

fn render_exports(
    cfg: &ExperimentConfig,
    phi: &ShapleyMatrix,
    rows: &DMatrix<f64>,
    groups: &FeatureGroups,
    fallback: &[f64],
    cell_name: &str,
) -> anyhow::Result<CellExports> {
    let shown = display_rows(rows, fallback);
    let values = group_values(&shown, groups);
    let mut shap_csv = Vec::new();
    write_shapley_csv(&mut shap_csv, phi, &values)?;

    let stack = cfg.plot_class.min(phi.n_outputs() - 1);
    let importance = phi.global_importance(stack);
    let bar_svg = plots::importance_bar_svg(&importance, phi.player_labels());
    let records = beeswarm_table(phi, &values, stack)?;
    let jitter_seed = derive_seed(cfg.base_seed, "jitter", stable_index(cell_name));
    let beeswarm_svg = plots::beeswarm_svg(&records, jitter_seed);
    Ok(CellExports {
        shap_csv,
        bar_svg,
        beeswarm_svg,
    })
}

fn stable_index(name: &str) -> u64 {
    // Reuse the stable content hash as a derivation index.
    u64::from_str_radix(&shapbench_core::rng::stable_hash_hex(name.as_bytes())[..16], 16)
        .unwrap_or(0)
}

fn build_imputer_spec(cfg: &ExperimentConfig, method: MethodName, seed: u64) -> Option<ImputerSpec> {
    let m = match method {
        MethodName::Mean => Method::Mean,
        MethodName::Mice => Method::Mice(cfg.mice),
        MethodName::Dimv => Method::Dimv(cfg.dimv),
        MethodName::MissForest => Method::MissForest(cfg.missforest),
        MethodName::SoftImpute => Method::SoftImpute(cfg.softimpute),
        MethodName::GbtNative => return None,
    };
    Some(ImputerSpec { method: m, seed })
}

#[allow(clippy::too_many_arguments)]
fn run_cell(
    cfg: &ExperimentConfig,
    dataset: &LoadedDataset,
    method: MethodName,
    masked_train: &MaskedMatrix,
    masked_test: &MaskedMatrix,
    phi_ref: &ShapleyMatrix,
    groups: &FeatureGroups,
    labels: &[String],
    m_explained: usize,
    imputer_seed: u64,
    exports: Option<(&mut Vec<(String, Vec<u8>)>, &str)>,
) -> CellSlots {
    match run_cell_inner(
        cfg,
        dataset,
        method,
        masked_train,
        masked_test,
        phi_ref,
        groups,
        labels,
        m_explained,
        imputer_seed,
        exports,
    ) {
        Ok(slots) => slots,
        Err(e) => CellSlots {
            mse: Slot::Failed(e.to_string()),
            mse_shap: Slot::Failed(e.to_string()),
        },
    }
}

#[allow(clippy::too_many_arguments)]
fn run_cell_inner(
    cfg: &ExperimentConfig,
    dataset: &LoadedDataset,
    method: MethodName,
    masked_train: &MaskedMatrix,
    masked_test: &MaskedMatrix,
    phi_ref: &ShapleyMatrix,
    groups: &FeatureGroups,
    labels: &[String],
    m_explained: usize,
    imputer_seed: u64,
    exports: Option<(&mut Vec<(String, Vec<u8>)>, &str)>,
) -> anyhow::Result<CellSlots> {
    let task = dataset.cfg.task;
    let y_train = masked_train.target();
    let y_test = masked_test.target();
    let p = masked_train.n_features();

    if cfg.strict_all_missing_rows && method != MethodName::GbtNative {
        let bad_train = masked_train.mask().fully_missing_rows();
        let bad_test = masked_test.mask().fully_missing_rows();
        if !bad_train.is_empty() || !bad_test.is_empty() {
            bail!(
                "strict mode: {} train / {} test rows have all features missing",
                bad_train.len(),
                bad_test.len()
            );
        }
    }

    let (arm, explain_input, mse, retrain_x): (Arm, DMatrix<f64>, Slot, Option<DMatrix<f64>>) =
        if method == MethodName::GbtNative {
            // Native-missing boosted trees on the raw masked data; the
            // explainer passes missing flags straight through.
            let train_x = masked_train.values_with_nans();
            let arm = match task {
                Task::Regression => Arm::Gbt(fit_gbt_regression(&train_x, y_train, &cfg.gbt)?),
                Task::Classification => Arm::Gbt(fit_gbt_classification(
                    &train_x,
                    y_train,
                    dataset.n_classes,
                    &cfg.gbt,
                )?),
            };
            let mse = match task {
                Task::Regression => {
                    let preds: Vec<f64> = (0..masked_test.n_rows())
                        .map(|i| arm.predict(&masked_test.row_with_nans(i)).map(|v| v[0]))
                        .collect::<shapbench_core::Result<_>>()?;
                    let truth: Vec<f64> = y_test.iter().copied().collect();
                    Slot::Value(metrics::prediction_mse(&preds, &truth)?)
                }
                // No imputation step, so input-side MSE has no definition.
                Task::Classification => Slot::NotApplicable,
            };
            (arm, masked_test.values_with_nans(), mse, None)
        } else {
            let spec = build_imputer_spec(cfg, method, imputer_seed).expect("imputation method");
            let fitted = impute::fit(&spec, masked_train)?;
            let train_imp = fitted.train_imputed();
            let test_imp = fitted.transform(masked_test)?;

            let arm = fit_downstream(cfg, task, dataset.n_classes, train_imp.values(), y_train)?;
            let mse = match task {
                Task::Regression => {
                    let preds: Vec<f64> = (0..masked_test.n_rows())
                        .map(|i| arm.predict(&test_imp.row(i)).map(|v| v[0]))
                        .collect::<shapbench_core::Result<_>>()?;
                    let truth: Vec<f64> = y_test.iter().copied().collect();
                    Slot::Value(metrics::prediction_mse(&preds, &truth)?)
                }
                Task::Classification => match metrics::imputation_mse(&test_imp, masked_test)? {
                    Some(v) => Slot::Value(v),
                    None => Slot::NotApplicable,
                },
            };
            let retrain_x = (cfg.shap_mode == ShapMode::Retrain).then(|| train_imp.values().clone());
            (arm, test_imp.values().clone(), mse, retrain_x)
        };

    let rows = DMatrix::from_fn(m_explained, p, |i, j| explain_input[(i, j)]);
    let flags = group_flags(masked_test, groups, m_explained);
    let retrain_ctx = retrain_x.as_ref().map(|x| (x, y_train));
    let phi = explain_rows(cfg, &arm, groups, labels, &rows, flags, retrain_ctx)?;
    let mse_shap = Slot::Value(compare_shap(cfg, &phi, phi_ref)?);

    if let Some((sink, cell_name)) = exports {
        let fallback = arm.feature_means();
        let rendered = render_exports(cfg, &phi, &rows, groups, &fallback, cell_name)?;
        sink.push((format!("shap/{cell_name}.csv"), rendered.shap_csv));
        sink.push((
            format!("plots/{cell_name}_bar.svg"),
            rendered.bar_svg.into_bytes(),
        ));
        sink.push((
            format!("plots/{cell_name}_beeswarm.svg"),
            rendered.beeswarm_svg.into_bytes(),
        ));
    }

    Ok(CellSlots { mse, mse_shap })
}

fn run_context(
    cfg: &ExperimentConfig,
    dataset: &LoadedDataset,
    d_idx: usize,
    rep: usize,
) -> anyhow::Result<ContextOut> {
    let ctx_seed = derive_seed(
        cfg.base_seed,
        &format!("ctx:{}", dataset.cfg.name),
        rep as u64,
    );
    let (train, test) = split(
        &dataset.data,
        &SplitSpec {
            test_fraction: cfg.test_fraction,
            seed: derive_seed(ctx_seed, "split", 0),
        },
    )?;
    let (train, test) = if cfg.standardize {
        let s = Standardizer::fit(&train);
        (s.transform(&train)?, s.transform(&test)?)
    } else {
        (train, test)
    };

    let p = train.n_features();
    let groups = if cfg.feature_groups == 0 {
        FeatureGroups::singletons(p)
    } else {
        FeatureGroups::contiguous(p, cfg.feature_groups)?
    };
    let labels = player_labels(&groups, train.feature_names());
    let m_explained = cfg.explain_cap.min(test.n_rows());
    let cap_hit = m_explained < test.n_rows();

    // Reference pipeline: downstream model on the original complete train,
    // explained on the original complete test rows.
    let ref_arm = fit_downstream(
        cfg,
        dataset.cfg.task,
        dataset.n_classes,
        train.values(),
        train.target(),
    )?;
    let ref_rows = DMatrix::from_fn(m_explained, p, |i, j| test.values()[(i, j)]);
    let ref_flags = vec![vec![false; groups.n_players()]; m_explained];
    let retrain_ref = (cfg.shap_mode == ShapMode::Retrain).then(|| train.values().clone());
    let retrain_ctx = retrain_ref.as_ref().map(|x| (x, train.target()));
    let phi_ref = explain_rows(cfg, &ref_arm, &groups, &labels, &ref_rows, ref_flags, retrain_ctx)?;

    let mut exports = Vec::new();
    if rep == 0 {
        let cell_name = format!("{}_original", dataset.cfg.name);
        let fallback = ref_arm.feature_means();
        let rendered = render_exports(cfg, &phi_ref, &ref_rows, &groups, &fallback, &cell_name)?;
        exports.push((format!("shap/{cell_name}.csv"), rendered.shap_csv));
        exports.push((
            format!("plots/{cell_name}_bar.svg"),
            rendered.bar_svg.into_bytes(),
        ));
        exports.push((
            format!("plots/{cell_name}_beeswarm.svg"),
            rendered.beeswarm_svg.into_bytes(),
        ));
    }

    let mut cells = Vec::with_capacity(cfg.rates.len());
    for &rate in &cfg.rates {
        let rate_key = (rate * 1e9).round() as u64;
        let masked_train = apply_mcar(&train, rate, derive_seed(ctx_seed, "mask-train", rate_key))?;
        let masked_test = apply_mcar(&test, rate, derive_seed(ctx_seed, "mask-test", rate_key))?;

        let mut row = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let imputer_seed = derive_seed(
                ctx_seed,
                &format!("imputer:{}", method.name()),
                rate_key,
            );
            let cell_name = format!("{}_r{}_{}", dataset.cfg.name, rate, method.name());
            let export_sink = (rep == 0).then_some((&mut exports, cell_name.as_str()));
            row.push(run_cell(
                cfg,
                dataset,
                method,
                &masked_train,
                &masked_test,
                &phi_ref,
                &groups,
                &labels,
                m_explained,
                imputer_seed,
                export_sink,
            ));
        }
        cells.push(row);
    }

    Ok(ContextOut {
        d_idx,
        rep,
        seed: ctx_seed,
        cells,
        exports,
        cap_hit,
    })
}

fn load_datasets(cfg: &ExperimentConfig) -> anyhow::Result<Vec<LoadedDataset>> {
    cfg.datasets
        .iter()
        .map(|d| {
            let data = load_csv(&d.path, &d.target, d.task)
                .with_context(|| format!("loading dataset '{}'", d.name))?;
            let players = if cfg.feature_groups == 0 {
                data.n_features()
            } else {
                cfg.feature_groups
            };
            if players > cfg.max_players {
                bail!(
                    "dataset '{}' yields {} attribution players, above shapley.max_p = {} \
                     (set feature_groups to group features)",
                    d.name,
                    players,
                    cfg.max_players
                );
            }
            if cfg.shap_mode == ShapMode::Retrain && d.task == Task::Classification {
                bail!("shapley.mode = retrain supports regression datasets only");
            }
            let n_classes = data.n_classes();
            Ok(LoadedDataset {
                cfg: d.clone(),
                data,
                n_classes,
            })
        })
        .collect()
}

/// Execute the full experiment and write tables, exports, plots, and
/// provenance under the configured output directory.
pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<RunReport> {
    cfg.validate().map_err(|e| anyhow!(e.to_string()))?;
    let datasets = load_datasets(cfg)?;

    let work: Vec<(usize, usize)> = (0..datasets.len())
        .flat_map(|d| (0..cfg.repetitions).map(move |r| (d, r)))
        .collect();

    let contexts: Vec<ContextOut> = if cfg.jobs == 1 {
        work.iter()
            .map(|&(d, r)| run_context(cfg, &datasets[d], d, r))
            .collect::<anyhow::Result<_>>()?
    } else {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .context("building worker pool")?;
        pool.install(|| {
            work.par_iter()
                .map(|&(d, r)| run_context(cfg, &datasets[d], d, r))
                .collect::<anyhow::Result<_>>()
        })?
    };

    // Deterministic ordering regardless of scheduling.
    let mut by_key: BTreeMap<(usize, usize), &ContextOut> = BTreeMap::new();
    for c in &contexts {
        by_key.insert((c.d_idx, c.rep), c);
    }

    let mut cells = Vec::new();
    let mut unavailable = Vec::new();
    for (d_idx, dataset) in datasets.iter().enumerate() {
        let mse_criteria = match dataset.cfg.task {
            Task::Regression => Criteria::PredictionMse,
            Task::Classification => Criteria::ImputationMse,
        };
        for (r_idx, &rate) in cfg.rates.iter().enumerate() {
            for (m_idx, &method) in cfg.methods.iter().enumerate() {
                for (criteria, pick) in [
                    (mse_criteria, 0usize),
                    (Criteria::MseShap, 1usize),
                ] {
                    let mut values = Vec::new();
                    let mut failure: Option<String> = None;
                    let mut not_applicable = false;
                    for rep in 0..cfg.repetitions {
                        let ctx = by_key[&(d_idx, rep)];
                        let slot = match pick {
                            0 => &ctx.cells[r_idx][m_idx].mse,
                            _ => &ctx.cells[r_idx][m_idx].mse_shap,
                        };
                        match slot {
                            Slot::Value(v) => values.push(*v),
                            Slot::NotApplicable => not_applicable = true,
                            Slot::Failed(reason) => {
                                failure.get_or_insert_with(|| reason.clone());
                            }
                        }
                    }
                    if let Some(reason) = failure {
                        unavailable.push(UnavailableCell {
                            dataset: dataset.cfg.name.clone(),
                            rate,
                            method: method.name().to_string(),
                            criteria: criteria.name().to_string(),
                            reason,
                        });
                    } else if !not_applicable {
                        cells.push(metrics::aggregate(
                            &dataset.cfg.name,
                            rate,
                            method.name(),
                            criteria,
                            &values,
                        )?);
                    }
                }
            }
        }
    }

    // Collect outputs: per-cell exports from rep 0 plus the tables.
    let mut files: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for ctx in contexts.iter().filter(|c| c.rep == 0) {
        for (path, bytes) in &ctx.exports {
            files.insert(path.clone(), bytes.clone());
        }
    }
    files.insert(
        "tables/mse.csv".into(),
        wide_table(cfg, &datasets, &cells, &unavailable).into_bytes(),
    );
    files.insert(
        "tables/long.csv".into(),
        long_table(cfg, &datasets, &by_key).into_bytes(),
    );
    let mut output_names: Vec<String> = files.keys().cloned().collect();
    output_names.push("provenance.json".into());
    files.insert(
        "provenance.json".into(),
        provenance(cfg, &datasets, &by_key, &unavailable, &output_names)?,
    );

    let out_dir = &cfg.output_dir;
    for (rel, bytes) in &files {
        let path = out_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }

    Ok(RunReport {
        cells,
        unavailable,
        outputs: files.keys().cloned().collect(),
    })
}

/// Wide table: one row per (dataset, rate, criteria), one column per
/// method; unavailable or not-applicable cells render as `-`.
fn wide_table(
    cfg: &ExperimentConfig,
    datasets: &[LoadedDataset],
    cells: &[MetricCell],
    unavailable: &[UnavailableCell],
) -> String {
    let mut out = String::from("dataset,rate,criteria");
    for m in &cfg.methods {
        out.push(',');
        out.push_str(m.name());
    }
    out.push('\n');

    for dataset in datasets {
        let mse_criteria = match dataset.cfg.task {
            Task::Regression => Criteria::PredictionMse,
            Task::Classification => Criteria::ImputationMse,
        };
        for &rate in &cfg.rates {
            for (label, criteria) in [("mse", mse_criteria), ("mse_shap", Criteria::MseShap)] {
                out.push_str(&format!("{},{},{}", dataset.cfg.name, rate, label));
                for method in &cfg.methods {
                    let cell = cells.iter().find(|c| {
                        c.dataset == dataset.cfg.name
                            && c.rate == rate
                            && c.method == method.name()
                            && c.criteria == criteria
                    });
                    match cell {
                        Some(c) => out.push_str(&format!(",{:.6}", c.value)),
                        None => out.push_str(",-"),
                    }
                    // Unavailable cells are tracked separately; both cases
                    // render as the marker above.
                    let _ = unavailable;
                }
                out.push('\n');
            }
        }
    }
    out
}

/// Long table: one row per (dataset, rate, method, criteria, repetition);
/// failed repetitions carry `NA`.
fn long_table(
    cfg: &ExperimentConfig,
    datasets: &[LoadedDataset],
    by_key: &BTreeMap<(usize, usize), &ContextOut>,
) -> String {
    let mut out = String::from("dataset,rate,method,criteria,repetition,value\n");
    for (d_idx, dataset) in datasets.iter().enumerate() {
        let mse_criteria = match dataset.cfg.task {
            Task::Regression => Criteria::PredictionMse,
            Task::Classification => Criteria::ImputationMse,
        };
        for (r_idx, &rate) in cfg.rates.iter().enumerate() {
            for (m_idx, &method) in cfg.methods.iter().enumerate() {
                for rep in 0..cfg.repetitions {
                    let ctx = by_key[&(d_idx, rep)];
                    let cell = &ctx.cells[r_idx][m_idx];
                    for (criteria, slot) in
                        [(mse_criteria, &cell.mse), (Criteria::MseShap, &cell.mse_shap)]
                    {
                        let rendered = match slot {
                            Slot::Value(v) => format!("{v:.6}"),
                            Slot::NotApplicable => continue,
                            Slot::Failed(_) => "NA".to_string(),
                        };
                        out.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            dataset.cfg.name,
                            rate,
                            method.name(),
                            criteria.name(),
                            rep,
                            rendered
                        ));
                    }
                }
            }
        }
    }
    out
}

fn provenance(
    cfg: &ExperimentConfig,
    datasets: &[LoadedDataset],
    by_key: &BTreeMap<(usize, usize), &ContextOut>,
    unavailable: &[UnavailableCell],
    outputs: &[String],
) -> anyhow::Result<Vec<u8>> {
    let mut ctx_seeds = Vec::new();
    let mut cap_hits = Vec::new();
    for ((d_idx, rep), ctx) in by_key {
        ctx_seeds.push(serde_json::json!({
            "dataset": datasets[*d_idx].cfg.name,
            "repetition": rep,
            "seed": ctx.seed,
        }));
        if ctx.cap_hit && *rep == 0 {
            cap_hits.push(datasets[*d_idx].cfg.name.clone());
        }
    }
    let doc = serde_json::json!({
        "tool": "shapbench",
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash(),
        "config": cfg.canonical_text(),
        "datasets": datasets.iter().map(|d| serde_json::json!({
            "name": d.cfg.name,
            "rows": d.data.n_rows(),
            "features": d.data.n_features(),
            "task": match d.cfg.task { Task::Regression => "regression", Task::Classification => "classification" },
            "classes": d.n_classes,
        })).collect::<Vec<_>>(),
        "explain_cap_hit": cap_hits,
        "context_seeds": ctx_seeds,
        "unavailable_cells": unavailable.iter().map(|u| serde_json::json!({
            "dataset": u.dataset, "rate": u.rate, "method": u.method,
            "criteria": u.criteria, "reason": u.reason,
        })).collect::<Vec<_>>(),
        "outputs": outputs,
    });
    Ok(serde_json::to_vec_pretty(&doc)?)
}
