//! Flat key-value experiment configuration.
//!
//! Format: UTF-8 text, one `key = value` pair per line, `#` comments.
//! Datasets are declared as `dataset.<name>.path / .target / .task` triples
//! and run in first-appearance order. Unknown keys are rejected so typos
//! fail loudly instead of silently falling back to defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use shapbench_core::data::Task;
use shapbench_core::impute::{DimvParams, MiceParams, MissForestParams, SoftImputeParams};
use shapbench_core::model::GbtParams;
use shapbench_core::rng::stable_hash_hex;

#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodName {
    GbtNative,
    Mean,
    Mice,
    Dimv,
    MissForest,
    SoftImpute,
}

impl MethodName {
    pub fn name(&self) -> &'static str {
        match self {
            MethodName::GbtNative => "gbt_native",
            MethodName::Mean => "mean",
            MethodName::Mice => "mice",
            MethodName::Dimv => "dimv",
            MethodName::MissForest => "missforest",
            MethodName::SoftImpute => "softimpute",
        }
    }

    fn parse(s: &str) -> Result<MethodName> {
        match s {
            "gbt_native" => Ok(MethodName::GbtNative),
            "mean" => Ok(MethodName::Mean),
            "mice" => Ok(MethodName::Mice),
            "dimv" => Ok(MethodName::Dimv),
            "missforest" => Ok(MethodName::MissForest),
            "softimpute" => Ok(MethodName::SoftImpute),
            other => Err(ConfigError(format!("unknown method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Downstream {
    Linear,
    Gbt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapMode {
    Marginal,
    Retrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundKind {
    TrainMean,
    Zero,
}

#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub name: String,
    pub path: PathBuf,
    pub target: String,
    pub task: Task,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetConfig>,
    pub rates: Vec<f64>,
    pub methods: Vec<MethodName>,
    pub downstream: Downstream,
    pub repetitions: usize,
    pub base_seed: u64,
    pub test_fraction: f64,
    pub standardize: bool,
    /// Ridge used by downstream linear fits in the runner (keeps cells
    /// alive when high missing rates flatten a column).
    pub ridge: f64,
    pub shap_mode: ShapMode,
    pub background: BackgroundKind,
    pub max_players: usize,
    /// Explain at most this many test rows per cell (all when it exceeds
    /// the test size; a binding cap is flagged in provenance).
    pub explain_cap: usize,
    /// `None` averages MSE-SHAP over all class stacks.
    pub mse_shap_class: Option<usize>,
    /// Class stack used for plots and exports on classification tasks.
    pub plot_class: usize,
    /// 0 = one player per feature; otherwise the number of contiguous
    /// feature groups used as attribution players.
    pub feature_groups: usize,
    pub strict_all_missing_rows: bool,
    pub output_dir: PathBuf,
    pub jobs: usize,
    pub check_seeds: usize,
    pub gbt: GbtParams,
    pub mice: MiceParams,
    pub dimv: DimvParams,
    pub missforest: MissForestParams,
    pub softimpute: SoftImputeParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: Vec::new(),
            rates: vec![0.2, 0.4, 0.6, 0.8],
            methods: vec![
                MethodName::GbtNative,
                MethodName::Mean,
                MethodName::Mice,
                MethodName::Dimv,
                MethodName::MissForest,
                MethodName::SoftImpute,
            ],
            downstream: Downstream::Linear,
            repetitions: 10,
            base_seed: 42,
            test_fraction: 0.2,
            standardize: true,
            ridge: 1e-9,
            shap_mode: ShapMode::Marginal,
            background: BackgroundKind::TrainMean,
            max_players: 16,
            explain_cap: 200,
            mse_shap_class: None,
            plot_class: 0,
            feature_groups: 0,
            strict_all_missing_rows: false,
            output_dir: PathBuf::from("out"),
            jobs: 0,
            check_seeds: 3,
            gbt: GbtParams::default(),
            mice: MiceParams::default(),
            dimv: DimvParams::default(),
            missforest: MissForestParams::default(),
            softimpute: SoftImputeParams::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| ConfigError(format!("key '{key}': cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(ConfigError(format!("key '{key}': expected true/false"))),
    }
}

impl ExperimentConfig {
    /// Parse configuration text. `base_dir` anchors relative dataset and
    /// output paths (usually the config file's directory).
    pub fn parse(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        let mut dataset_keys: BTreeMap<String, (Option<PathBuf>, Option<String>, Option<Task>)> =
            BTreeMap::new();
        let mut dataset_order: Vec<String> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    lineno + 1
                )));
            };
            let key = key.trim();
            let value = value.trim();

            if let Some(rest) = key.strip_prefix("dataset.") {
                let Some((name, attr)) = rest.split_once('.') else {
                    return Err(ConfigError(format!(
                        "key '{key}': expected dataset.<name>.<path|target|task>"
                    )));
                };
                if !dataset_keys.contains_key(name) {
                    dataset_order.push(name.to_string());
                    dataset_keys.insert(name.to_string(), (None, None, None));
                }
                let entry = dataset_keys.get_mut(name).unwrap();
                match attr {
                    "path" => entry.0 = Some(base_dir.join(value)),
                    "target" => entry.1 = Some(value.to_string()),
                    "task" => {
                        entry.2 = Some(match value {
                            "regression" => Task::Regression,
                            "classification" => Task::Classification,
                            other => {
                                return Err(ConfigError(format!("unknown task '{other}'")))
                            }
                        })
                    }
                    other => {
                        return Err(ConfigError(format!("unknown dataset attribute '{other}'")))
                    }
                }
                continue;
            }

            match key {
                "rates" => {
                    cfg.rates = value
                        .split(',')
                        .map(|v| parse_num("rates", v.trim()))
                        .collect::<Result<Vec<f64>>>()?;
                }
                "methods" => {
                    cfg.methods = value
                        .split(',')
                        .map(|v| MethodName::parse(v.trim()))
                        .collect::<Result<Vec<_>>>()?;
                }
                "downstream" => {
                    cfg.downstream = match value {
                        "linear" => Downstream::Linear,
                        "gbt" => Downstream::Gbt,
                        other => return Err(ConfigError(format!("unknown downstream '{other}'"))),
                    }
                }
                "repetitions" => cfg.repetitions = parse_num(key, value)?,
                "base_seed" => cfg.base_seed = parse_num(key, value)?,
                "test_fraction" => cfg.test_fraction = parse_num(key, value)?,
                "standardize" => cfg.standardize = parse_bool(key, value)?,
                "ridge" => cfg.ridge = parse_num(key, value)?,
                "shapley.mode" => {
                    cfg.shap_mode = match value {
                        "marginal" => ShapMode::Marginal,
                        "retrain" => ShapMode::Retrain,
                        other => return Err(ConfigError(format!("unknown shapley.mode '{other}'"))),
                    }
                }
                "shapley.background" => {
                    cfg.background = match value {
                        "train_mean" => BackgroundKind::TrainMean,
                        "zero" => BackgroundKind::Zero,
                        other => {
                            return Err(ConfigError(format!(
                                "unknown shapley.background '{other}'"
                            )))
                        }
                    }
                }
                "shapley.max_p" => cfg.max_players = parse_num(key, value)?,
                "shapley.explain_cap" => cfg.explain_cap = parse_num(key, value)?,
                "shapley.class" => {
                    cfg.mse_shap_class = match value {
                        "all" => None,
                        v => Some(parse_num(key, v)?),
                    }
                }
                "plot.class" => cfg.plot_class = parse_num(key, value)?,
                "feature_groups" => cfg.feature_groups = parse_num(key, value)?,
                "strict_all_missing_rows" => {
                    cfg.strict_all_missing_rows = parse_bool(key, value)?
                }
                "output_dir" => cfg.output_dir = base_dir.join(value),
                "jobs" => cfg.jobs = parse_num(key, value)?,
                "check.seeds" => cfg.check_seeds = parse_num(key, value)?,
                "gbt.n_trees" => cfg.gbt.n_trees = parse_num(key, value)?,
                "gbt.max_depth" => cfg.gbt.max_depth = parse_num(key, value)?,
                "gbt.learning_rate" => cfg.gbt.learning_rate = parse_num(key, value)?,
                "gbt.min_samples_leaf" => cfg.gbt.min_samples_leaf = parse_num(key, value)?,
                "mice.tol" => cfg.mice.tol = parse_num(key, value)?,
                "mice.max_sweeps" => cfg.mice.max_sweeps = parse_num(key, value)?,
                "mice.ridge" => cfg.mice.ridge = parse_num(key, value)?,
                "dimv.lambda" => cfg.dimv.lambda = parse_num(key, value)?,
                "missforest.trees" => cfg.missforest.n_trees = parse_num(key, value)?,
                "missforest.max_depth" => cfg.missforest.max_depth = parse_num(key, value)?,
                "missforest.max_sweeps" => cfg.missforest.max_sweeps = parse_num(key, value)?,
                "softimpute.lambda" => {
                    cfg.softimpute.lambda = match value {
                        "auto" => None,
                        v => Some(parse_num(key, v)?),
                    }
                }
                "softimpute.tol" => cfg.softimpute.tol = parse_num(key, value)?,
                "softimpute.max_iters" => cfg.softimpute.max_iters = parse_num(key, value)?,
                "softimpute.max_rank" => {
                    cfg.softimpute.max_rank = match value {
                        "none" => None,
                        v => Some(parse_num(key, v)?),
                    }
                }
                other => return Err(ConfigError(format!("unknown key '{other}'"))),
            }
        }

        for name in dataset_order {
            let (path, target, task) = dataset_keys.remove(&name).unwrap();
            cfg.datasets.push(DatasetConfig {
                path: path
                    .ok_or_else(|| ConfigError(format!("dataset.{name}.path missing")))?,
                target: target
                    .ok_or_else(|| ConfigError(format!("dataset.{name}.target missing")))?,
                task: task.ok_or_else(|| ConfigError(format!("dataset.{name}.task missing")))?,
                name,
            });
        }

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(ConfigError("at least one dataset is required".into()));
        }
        if self.rates.is_empty() || self.rates.iter().any(|r| !(0.0..1.0).contains(r)) {
            return Err(ConfigError(format!(
                "rates must be a non-empty subset of [0, 1): {:?}",
                self.rates
            )));
        }
        if self.methods.is_empty() {
            return Err(ConfigError("methods must be non-empty".into()));
        }
        if self.repetitions == 0 {
            return Err(ConfigError("repetitions must be >= 1".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(ConfigError(format!(
                "test_fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        if self.explain_cap == 0 {
            return Err(ConfigError("shapley.explain_cap must be >= 1".into()));
        }
        if self.shap_mode == ShapMode::Retrain && self.downstream != Downstream::Linear {
            return Err(ConfigError(
                "shapley.mode = retrain requires downstream = linear".into(),
            ));
        }
        Ok(())
    }

    /// Canonical text form: every effective setting, sorted by key. The
    /// provenance fingerprint hashes these bytes.
    pub fn canonical_text(&self) -> String {
        let mut lines: Vec<String> = Vec::new();
        for d in &self.datasets {
            lines.push(format!("dataset.{}.path = {}", d.name, d.path.display()));
            lines.push(format!("dataset.{}.target = {}", d.name, d.target));
            lines.push(format!(
                "dataset.{}.task = {}",
                d.name,
                match d.task {
                    Task::Regression => "regression",
                    Task::Classification => "classification",
                }
            ));
        }
        let rates: Vec<String> = self.rates.iter().map(|r| format!("{r}")).collect();
        lines.push(format!("rates = {}", rates.join(",")));
        let methods: Vec<&str> = self.methods.iter().map(|m| m.name()).collect();
        lines.push(format!("methods = {}", methods.join(",")));
        lines.push(format!(
            "downstream = {}",
            match self.downstream {
                Downstream::Linear => "linear",
                Downstream::Gbt => "gbt",
            }
        ));
        lines.push(format!("repetitions = {}", self.repetitions));
        lines.push(format!("base_seed = {}", self.base_seed));
        lines.push(format!("test_fraction = {}", self.test_fraction));
        lines.push(format!("standardize = {}", self.standardize));
        lines.push(format!("ridge = {}", self.ridge));
        lines.push(format!(
            "shapley.mode = {}",
            match self.shap_mode {
                ShapMode::Marginal => "marginal",
                ShapMode::Retrain => "retrain",
            }
        ));
        lines.push(format!(
            "shapley.background = {}",
            match self.background {
                BackgroundKind::TrainMean => "train_mean",
                BackgroundKind::Zero => "zero",
            }
        ));
        lines.push(format!("shapley.max_p = {}", self.max_players));
        lines.push(format!("shapley.explain_cap = {}", self.explain_cap));
        lines.push(format!(
            "shapley.class = {}",
            self.mse_shap_class
                .map_or("all".to_string(), |c| c.to_string())
        ));
        lines.push(format!("plot.class = {}", self.plot_class));
        lines.push(format!("feature_groups = {}", self.feature_groups));
        lines.push(format!(
            "strict_all_missing_rows = {}",
            self.strict_all_missing_rows
        ));
        lines.push(format!("gbt.n_trees = {}", self.gbt.n_trees));
        lines.push(format!("gbt.max_depth = {}", self.gbt.max_depth));
        lines.push(format!("gbt.learning_rate = {}", self.gbt.learning_rate));
        lines.push(format!(
            "gbt.min_samples_leaf = {}",
            self.gbt.min_samples_leaf
        ));
        lines.push(format!("mice.tol = {}", self.mice.tol));
        lines.push(format!("mice.max_sweeps = {}", self.mice.max_sweeps));
        lines.push(format!("mice.ridge = {}", self.mice.ridge));
        lines.push(format!("dimv.lambda = {}", self.dimv.lambda));
        lines.push(format!("missforest.trees = {}", self.missforest.n_trees));
        lines.push(format!(
            "missforest.max_depth = {}",
            self.missforest.max_depth
        ));
        lines.push(format!(
            "missforest.max_sweeps = {}",
            self.missforest.max_sweeps
        ));
        lines.push(format!(
            "softimpute.lambda = {}",
            self.softimpute
                .lambda
                .map_or("auto".to_string(), |l| l.to_string())
        ));
        lines.push(format!("softimpute.tol = {}", self.softimpute.tol));
        lines.push(format!(
            "softimpute.max_iters = {}",
            self.softimpute.max_iters
        ));
        lines.sort();
        lines.join("\n")
    }

    pub fn hash(&self) -> String {
        stable_hash_hex(self.canonical_text().as_bytes())
    }
}
