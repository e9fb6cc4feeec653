//! Model persistence as a documented JSON schema for experiment replay.
//!
//! Layout (`type` tag selects the family):
//!
//! ```json
//! {"type":"linear","intercept":b0,"coefficients":[..],"feature_means":[..]}
//! {"type":"linear_ovr","models":[..linear..]}
//! {"type":"gbt","task":"regression","base_scores":[..],"learning_rate":lr,
//!  "feature_means":[..],"trees":[[{"Split":{..}}|{"Leaf":{"value":v}},..],..]}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GbtModel, LinearModel, LinearOvrModel, Predictor};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SavedModel {
    Linear(LinearModel),
    LinearOvr(LinearOvrModel),
    Gbt(GbtModel),
}

impl SavedModel {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Persist(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<SavedModel> {
        serde_json::from_str(text).map_err(|e| Error::Persist(e.to_string()))
    }

    pub fn as_predictor(&self) -> &dyn Predictor {
        match self {
            SavedModel::Linear(m) => m,
            SavedModel::LinearOvr(m) => m,
            SavedModel::Gbt(m) => m,
        }
    }

    /// Training feature means; the background row used by `explain`.
    pub fn feature_means(&self) -> Vec<f64> {
        match self {
            SavedModel::Linear(m) => m.feature_means().to_vec(),
            SavedModel::LinearOvr(m) => m.class_model(0).feature_means().to_vec(),
            SavedModel::Gbt(m) => m.feature_means().to_vec(),
        }
    }
}
