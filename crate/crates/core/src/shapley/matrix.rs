//! Per-sample, per-player attribution matrices and their plot exports.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::shapley::value::FeatureGroups;

/// Attributions for a batch of explained samples: one `m x players` stack
/// per model output (a single stack for regression), missing flags marking
/// entries that were unobserved before imputation, and the sample ids the
/// rows refer to (used to guard metric alignment).
#[derive(Debug, Clone)]
pub struct ShapleyMatrix {
    stacks: Vec<DMatrix<f64>>,
    missing_flags: Vec<Vec<bool>>,
    sample_ids: Vec<usize>,
    player_labels: Vec<String>,
}

impl ShapleyMatrix {
    pub fn new(
        stacks: Vec<DMatrix<f64>>,
        missing_flags: Vec<Vec<bool>>,
        sample_ids: Vec<usize>,
        player_labels: Vec<String>,
    ) -> Result<ShapleyMatrix> {
        let first = stacks.first().ok_or_else(|| Error::ShapeMismatch {
            expected: "at least one output stack".into(),
            got: "0".into(),
        })?;
        let (m, g) = first.shape();
        for s in &stacks {
            if s.shape() != (m, g) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{m}x{g}"),
                    got: format!("{}x{}", s.nrows(), s.ncols()),
                });
            }
        }
        if missing_flags.len() != m
            || missing_flags.iter().any(|r| r.len() != g)
            || sample_ids.len() != m
            || player_labels.len() != g
        {
            return Err(Error::ShapeMismatch {
                expected: format!("flags {m}x{g}, {m} sample ids, {g} labels"),
                got: "inconsistent metadata".into(),
            });
        }
        Ok(ShapleyMatrix {
            stacks,
            missing_flags,
            sample_ids,
            player_labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.stacks[0].nrows()
    }

    pub fn n_players(&self) -> usize {
        self.stacks[0].ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.stacks.len()
    }

    pub fn stack(&self, output: usize) -> &DMatrix<f64> {
        &self.stacks[output]
    }

    pub fn stacks(&self) -> &[DMatrix<f64>] {
        &self.stacks
    }

    pub fn missing_flags(&self) -> &[Vec<bool>] {
        &self.missing_flags
    }

    pub fn sample_ids(&self) -> &[usize] {
        &self.sample_ids
    }

    pub fn player_labels(&self) -> &[String] {
        &self.player_labels
    }

    /// Mean absolute attribution per player for one output.
    pub fn global_importance(&self, output: usize) -> GlobalImportance {
        let stack = &self.stacks[output];
        let m = stack.nrows() as f64;
        let scores: Vec<f64> = (0..stack.ncols())
            .map(|j| stack.column(j).iter().map(|v| v.abs()).sum::<f64>() / m)
            .collect();
        GlobalImportance::new(scores)
    }
}

/// Per-player mean absolute Shapley value with a deterministic descending
/// order (ties broken by player index).
#[derive(Debug, Clone)]
pub struct GlobalImportance {
    scores: Vec<f64>,
    order: Vec<usize>,
}

impl GlobalImportance {
    pub fn new(scores: Vec<f64>) -> GlobalImportance {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        GlobalImportance { scores, order }
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Player indices from most to least important.
    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// One beeswarm dot: a (sample, player) pair with its attribution, the
/// player's value in that sample, a min-max normalized color value, and
/// the pre-imputation missingness flag.
#[derive(Debug, Clone)]
pub struct BeeswarmRecord {
    pub sample_id: usize,
    pub player: usize,
    pub label: String,
    pub shap: f64,
    pub feature_value: f64,
    pub color_value: f64,
    pub was_missing: bool,
}

/// Group-level values of a feature matrix: the mean of each group's member
/// features per row (the value a grouped beeswarm colors by).
pub fn group_values(values: &DMatrix<f64>, groups: &FeatureGroups) -> DMatrix<f64> {
    DMatrix::from_fn(values.nrows(), groups.n_players(), |i, g| {
        let members = groups.members(g);
        members.iter().map(|&j| values[(i, j)]).sum::<f64>() / members.len() as f64
    })
}

/// Flatten one output stack into plot records, player bands ordered by
/// global importance, samples in id order inside each band.
pub fn beeswarm_table(
    shap: &ShapleyMatrix,
    player_values: &DMatrix<f64>,
    output: usize,
) -> Result<Vec<BeeswarmRecord>> {
    let (m, g) = (shap.n_samples(), shap.n_players());
    if player_values.shape() != (m, g) {
        return Err(Error::ShapeMismatch {
            expected: format!("{m}x{g} player values"),
            got: format!("{}x{}", player_values.nrows(), player_values.ncols()),
        });
    }

    // Min-max color normalization per player; constant players sit at 0.5.
    let mut lo = vec![f64::INFINITY; g];
    let mut hi = vec![f64::NEG_INFINITY; g];
    for j in 0..g {
        for i in 0..m {
            lo[j] = lo[j].min(player_values[(i, j)]);
            hi[j] = hi[j].max(player_values[(i, j)]);
        }
    }

    let importance = shap.global_importance(output);
    let mut records = Vec::with_capacity(m * g);
    for &player in importance.order() {
        for i in 0..m {
            let value = player_values[(i, player)];
            let color = if hi[player] > lo[player] {
                (value - lo[player]) / (hi[player] - lo[player])
            } else {
                0.5
            };
            records.push(BeeswarmRecord {
                sample_id: shap.sample_ids()[i],
                player,
                label: shap.player_labels()[player].clone(),
                shap: shap.stack(output)[(i, player)],
                feature_value: value,
                color_value: color,
                was_missing: shap.missing_flags()[i][player],
            });
        }
    }
    Ok(records)
}

/// CSV export: `sample_id, feature, shap_value, feature_value, was_missing,
/// class`, every output stack included.
pub fn write_shapley_csv<W: Write>(
    out: &mut W,
    shap: &ShapleyMatrix,
    player_values: &DMatrix<f64>,
) -> Result<()> {
    writeln!(
        out,
        "sample_id,feature,shap_value,feature_value,was_missing,class"
    )?;
    for output in 0..shap.n_outputs() {
        for i in 0..shap.n_samples() {
            for j in 0..shap.n_players() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    shap.sample_ids()[i],
                    shap.player_labels()[j],
                    shap.stack(output)[(i, j)],
                    player_values[(i, j)],
                    u8::from(shap.missing_flags()[i][j]),
                    output
                )?;
            }
        }
    }
    Ok(())
}
