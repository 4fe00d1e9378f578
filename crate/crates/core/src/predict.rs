//! Failure prediction for a live twin from its current property values.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ml::{MlError, Model};
use crate::pipeline::{PipelineConfig, COL_MAX_LOAD, COL_MAX_POSITION, COL_STRAIN, COL_STRESS, PARTNER_SUFFIX};
use crate::twin::PropertyMap;

pub const FRACTURE_LABEL: &str = "fracture";
pub const NO_FRACTURE_LABEL: &str = "no_fracture";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictError {
    #[error("twin has no numeric value for model feature `{0}`")]
    MissingFeature(String),
    #[error(transparent)]
    Model(#[from] MlError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub fracture_probability: f64,
    pub predicted_label: String,
    pub model: String,
}

fn lookup(props: &PropertyMap, name: &str) -> Option<f64> {
    props
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(name))
        .and_then(|(_, v)| v.as_f64())
}

/// Build the model input from twin properties. Names match
/// case-insensitively (`Max_Load` feeds `max_load`). A missing rotated
/// measurement falls back to its unrotated value, and stress/strain are
/// derived from load/position when not stored.
pub fn features_from_properties(
    feature_names: &[String],
    props: &PropertyMap,
    config: &PipelineConfig,
) -> Result<Vec<f64>, PredictError> {
    feature_names
        .iter()
        .map(|name| {
            let derived = || match name.as_str() {
                COL_STRESS => lookup(props, COL_MAX_LOAD).map(|f| f / config.area),
                COL_STRAIN => lookup(props, COL_MAX_POSITION).map(|d| d / config.initial_length),
                _ => name
                    .strip_suffix(PARTNER_SUFFIX)
                    .and_then(|base| lookup(props, base)),
            };
            lookup(props, name)
                .or_else(derived)
                .ok_or_else(|| PredictError::MissingFeature(name.clone()))
        })
        .collect()
}

pub fn predict_twin(
    model: &Model,
    props: &PropertyMap,
    config: &PipelineConfig,
) -> Result<Prediction, PredictError> {
    let x = features_from_properties(model.feature_names(), props, config)?;
    let label = model.predict(&x)?;
    Ok(Prediction {
        fracture_probability: model.class_probability(&x, 1)?,
        predicted_label: if label == 1 { FRACTURE_LABEL } else { NO_FRACTURE_LABEL }.to_owned(),
        model: match model {
            Model::DecisionTree(_) => "tree",
            Model::RandomForest(_) => "forest",
        }
        .to_owned(),
    })
}
