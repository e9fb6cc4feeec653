//! `shapbench explain`: attribute rows from a CSV against a saved model.

use std::path::Path;

use anyhow::{bail, Context};
use shapbench_core::model::SavedModel;
use shapbench_core::shapley::{exact_shapley, linear_shapley, FeatureGroups, ValueFunction};

/// Load a serialized model, read rows (empty cells = missing), and return
/// the attribution table as CSV text. Missing entries are only legal for
/// tree models; the marginal value function uses the model's stored
/// training feature means as the background row.
pub fn explain_model(model_path: &Path, rows_path: &Path) -> anyhow::Result<String> {
    let text = std::fs::read_to_string(model_path)
        .with_context(|| format!("reading {}", model_path.display()))?;
    let model = SavedModel::from_json(&text)?;
    let background = vec![model.feature_means()];
    let p = background[0].len();

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(rows_path)
        .with_context(|| format!("reading {}", rows_path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    if headers.len() != p {
        bail!(
            "row file has {} columns but the model expects {p} features",
            headers.len()
        );
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(p);
        for (j, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
                row.push(f64::NAN);
            } else {
                row.push(cell.parse::<f64>().with_context(|| {
                    format!("row {}, column '{}': bad value '{cell}'", i + 1, headers[j])
                })?);
            }
        }
        rows.push(row);
    }

    let groups = FeatureGroups::singletons(p);
    let mut out = String::from("sample_id,feature,shap_value,class\n");
    for (i, row) in rows.iter().enumerate() {
        let per_class: Vec<Vec<f64>> = match &model {
            SavedModel::Linear(m) => vec![linear_shapley(m, row)?],
            SavedModel::LinearOvr(m) => (0..m.n_classes())
                .map(|c| linear_shapley(m.class_model(c), row))
                .collect::<shapbench_core::Result<_>>()?,
            SavedModel::Gbt(m) => {
                let vf = ValueFunction::Marginal {
                    model: m,
                    background: &background,
                };
                exact_shapley(&vf, &groups, row)?
            }
        };
        for (class, phi) in per_class.iter().enumerate() {
            for (j, value) in phi.iter().enumerate() {
                out.push_str(&format!("{i},{},{value},{class}\n", headers[j]));
            }
        }
    }
    Ok(out)
}
