use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DecisionTree, Forest, MlError};

pub const FORMAT_VERSION: u32 = 1;

/// A trained classifier as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    DecisionTree(DecisionTree),
    RandomForest(Forest),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    format_version: u32,
    #[serde(flatten)]
    model: Model,
}

impl Model {
    pub fn feature_names(&self) -> &[String] {
        match self {
            Model::DecisionTree(t) => &t.feature_names,
            Model::RandomForest(f) => &f.feature_names,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::DecisionTree(_) => "decision_tree",
            Model::RandomForest(_) => "random_forest",
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, MlError> {
        match self {
            Model::DecisionTree(t) => t.predict(x),
            Model::RandomForest(f) => f.predict(x),
        }
    }

    /// Leaf class fraction for a tree, vote fraction for a forest.
    pub fn class_probability(&self, x: &[f64], class: usize) -> Result<f64, MlError> {
        match self {
            Model::DecisionTree(t) => t.class_probability(x, class),
            Model::RandomForest(f) => f.class_probability(x, class),
        }
    }

    pub fn feature_importances(&self) -> Result<Vec<(String, f64)>, MlError> {
        match self {
            Model::DecisionTree(t) => Ok(t.feature_importances()),
            Model::RandomForest(f) => f.feature_importances(),
        }
    }

    pub fn to_json(&self) -> String {
        let env = Envelope {
            format_version: FORMAT_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&env).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, MlError> {
        let raw: serde_json::Value =
            serde_json::from_str(text).map_err(|e| MlError::Format(e.to_string()))?;
        match raw.get("format_version").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(FORMAT_VERSION) => {}
            Some(v) => return Err(MlError::Format(format!("unsupported format_version {v}"))),
            None => return Err(MlError::Format("missing format_version".into())),
        }
        let env: Envelope = serde_json::from_value(raw).map_err(|e| MlError::Format(e.to_string()))?;
        env.model.check()?;
        Ok(env.model)
    }

    fn check(&self) -> Result<(), MlError> {
        let d = self.feature_names().len();
        let roots: Vec<_> = match self {
            Model::DecisionTree(t) => vec![&t.root],
            Model::RandomForest(f) => {
                if f.trees.is_empty() {
                    return Err(MlError::UntrainedModel);
                }
                if f.trees.len() != f.n_trees || f.per_tree_seeds.len() != f.n_trees {
                    return Err(MlError::Format(format!(
                        "forest declares {} trees but stores {} trees and {} seeds",
                        f.n_trees,
                        f.trees.len(),
                        f.per_tree_seeds.len()
                    )));
                }
                f.trees.iter().collect()
            }
        };
        if roots.iter().any(|r| r.max_feature_index().is_some_and(|m| m >= d)) {
            return Err(MlError::Format("split references an unknown feature".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_json())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, MlError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| MlError::Format(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{Samples, TrainConfig, TreeParams};

    fn samples() -> Samples {
        Samples::new(
            vec!["a".into(), "b".into()],
            (0..40).map(|i| vec![i as f64 * 0.1, (i % 7) as f64]).collect(),
            (0..40).map(|i| usize::from(i >= 20)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_both_kinds() {
        let s = samples();
        let tree = Model::DecisionTree(DecisionTree::train(&s, &TreeParams::default()).unwrap());
        let forest = Model::RandomForest(
            Forest::train(&s, &TrainConfig {
                n_trees: 5,
                ..Default::default()
            })
            .unwrap(),
        );
        for m in [tree, forest] {
            let json = m.to_json();
            assert!(json.contains("\"format_version\": 1"));
            let back = Model::from_json(&json).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_json(), json);
        }
    }

    #[test]
    fn rejects_bad_documents() {
        let s = samples();
        let m = Model::DecisionTree(DecisionTree::train(&s, &TreeParams::default()).unwrap());
        let json = m.to_json().replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(matches!(Model::from_json(&json), Err(MlError::Format(_))));
        assert!(Model::from_json("{}").is_err());
        let mut v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        v["feature_names"] = serde_json::json!([]);
        assert!(Model::from_json(&v.to_string()).is_err());
    }
}
