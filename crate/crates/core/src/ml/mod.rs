//! Decision tree and random forest classifiers (CART-style, binary splits
//! on midpoints), with impurity-based feature importances.

mod forest;
mod impurity;
mod persist;
mod split;
mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use forest::{per_tree_seed, Forest};
pub use impurity::{entropy, gini, information_gain, SplitCriterion};
pub use persist::{Model, FORMAT_VERSION};
pub use split::train_test_split;
pub use tree::{grow_tree, DecisionTree, FeatureSampler, TreeNode, TreeParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlError {
    #[error("node has no samples")]
    EmptyNode,
    #[error("child counts do not sum to the parent counts")]
    PartitionMismatch,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("expected {expected} features, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("model has not been trained")]
    UntrainedModel,
    #[error("split leaves an empty side ({train} train / {test} test)")]
    DegenerateSplit { train: usize, test: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file: {0}")]
    Format(String),
}

/// Feature matrix with integer class labels `0..n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub feature_names: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Samples {
    pub fn new(feature_names: Vec<String>, x: Vec<Vec<f64>>, y: Vec<usize>) -> Result<Self, MlError> {
        if x.len() != y.len() {
            return Err(MlError::InvalidConfig(format!(
                "{} feature rows but {} labels",
                x.len(),
                y.len()
            )));
        }
        if let Some(row) = x.iter().find(|r| r.len() != feature_names.len()) {
            return Err(MlError::ArityMismatch {
                expected: feature_names.len(),
                found: row.len(),
            });
        }
        if x.iter().flatten().any(|v| !v.is_finite()) {
            return Err(MlError::InvalidConfig("non-finite feature value".into()));
        }
        Ok(Self {
            feature_names,
            x,
            y,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// At least two, so a single-class training set still yields a binary model.
    pub fn n_classes(&self) -> usize {
        self.y.iter().max().map_or(2, |&m| (m + 1).max(2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeaturesRule {
    /// ⌈√d⌉
    Sqrt,
    All,
}

/// Number of features examined per split in a forest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MaxFeatures {
    Count(usize),
    Rule(MaxFeaturesRule),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Count(k) => k.clamp(1, d.max(1)),
            MaxFeatures::Rule(MaxFeaturesRule::All) => d.max(1),
            MaxFeatures::Rule(MaxFeaturesRule::Sqrt) => ((d as f64).sqrt().ceil() as usize).clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub criterion: SplitCriterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
    pub test_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            criterion: SplitCriterion::Gini,
            max_depth: 10,
            min_samples_split: 2,
            n_trees: 100,
            max_features: MaxFeatures::Rule(MaxFeaturesRule::Sqrt),
            seed: 42,
            test_fraction: 0.3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), MlError> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(MlError::InvalidConfig(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.max_depth < 1 {
            return Err(MlError::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.n_trees < 1 {
            return Err(MlError::InvalidConfig("n_trees must be >= 1".into()));
        }
        Ok(())
    }

    pub fn tree_params(&self) -> TreeParams {
        TreeParams {
            criterion: self.criterion,
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split,
        }
    }
}

/// Normalize to unit sum; all-zero input stays all-zero.
pub(crate) fn normalize(weights: &mut [f64]) {
    let sum: f64 = weights.iter().sum();
    if sum > 0.0 {
        for w in weights.iter_mut() {
            *w /= sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_features_resolution() {
        let sqrt = MaxFeatures::Rule(MaxFeaturesRule::Sqrt);
        assert_eq!(sqrt.resolve(36), 6);
        assert_eq!(sqrt.resolve(37), 7);
        assert_eq!(sqrt.resolve(1), 1);
        assert_eq!(MaxFeatures::Count(50).resolve(10), 10);
        let json = serde_json::to_string(&TrainConfig::default()).unwrap();
        assert!(json.contains(r#""max_features":"sqrt""#));
        let c: TrainConfig = serde_json::from_str(r#"{"max_features":4}"#).unwrap();
        assert_eq!(c.max_features, MaxFeatures::Count(4));
    }

    #[test]
    fn config_validation() {
        let bad = TrainConfig {
            test_fraction: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            max_depth: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        TrainConfig::default().validate().unwrap();
    }
}
