use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{grow_tree, normalize, FeatureSampler, MlError, Samples, SplitCriterion, TrainConfig, TreeNode};

/// Seed of tree `index`, mixed from the master seed so that trees can be
/// grown in any order or in parallel.
pub fn per_tree_seed(master: u64, index: usize) -> u64 {
    let mut z = master.wrapping_add((index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Bagged ensemble of trees with per-split feature subsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub feature_names: Vec<String>,
    pub n_classes: usize,
    pub criterion: SplitCriterion,
    pub n_trees: usize,
    pub max_features: usize,
    pub per_tree_seeds: Vec<u64>,
    pub trees: Vec<TreeNode>,
}

impl Forest {
    pub fn train(samples: &Samples, config: &TrainConfig) -> Result<Self, MlError> {
        config.validate()?;
        if samples.is_empty() {
            return Err(MlError::EmptyTrainingSet);
        }
        let params = config.tree_params();
        let max_features = config.max_features.resolve(samples.n_features());
        let per_tree_seeds: Vec<u64> = (0..config.n_trees)
            .map(|i| per_tree_seed(config.seed, i))
            .collect();
        let n = samples.len();
        let trees = per_tree_seeds
            .par_iter()
            .map(|&seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let bag: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                let mut sampler = FeatureSampler::Random {
                    k: max_features,
                    rng: &mut rng,
                };
                grow_tree(samples, &bag, &params, &mut sampler)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            feature_names: samples.feature_names.clone(),
            n_classes: samples.n_classes(),
            criterion: config.criterion,
            n_trees: config.n_trees,
            max_features,
            per_tree_seeds,
            trees,
        })
    }

    fn check(&self, x: &[f64]) -> Result<(), MlError> {
        if self.trees.is_empty() {
            return Err(MlError::UntrainedModel);
        }
        if x.len() != self.feature_names.len() {
            return Err(MlError::ArityMismatch {
                expected: self.feature_names.len(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn votes(&self, x: &[f64]) -> Result<Vec<usize>, MlError> {
        self.check(x)?;
        let mut votes = vec![0; self.n_classes.max(1)];
        for t in &self.trees {
            let label = t.predict(x);
            if label >= votes.len() {
                votes.resize(label + 1, 0);
            }
            votes[label] += 1;
        }
        Ok(votes)
    }

    /// Majority vote, ties toward the smaller label.
    pub fn predict(&self, x: &[f64]) -> Result<usize, MlError> {
        let votes = self.votes(x)?;
        Ok(votes
            .iter()
            .enumerate()
            .fold((0, 0), |best, (k, &c)| if c > best.1 { (k, c) } else { best })
            .0)
    }

    /// Fraction of trees voting for `class`.
    pub fn class_probability(&self, x: &[f64], class: usize) -> Result<f64, MlError> {
        let votes = self.votes(x)?;
        Ok(votes.get(class).copied().unwrap_or(0) as f64 / self.trees.len() as f64)
    }

    /// Mean of the per-tree normalized importances, renormalized.
    pub fn feature_importances(&self) -> Result<Vec<(String, f64)>, MlError> {
        if self.trees.is_empty() {
            return Err(MlError::UntrainedModel);
        }
        let d = self.feature_names.len();
        let mut acc = vec![0.0; d];
        for t in &self.trees {
            for (a, w) in acc.iter_mut().zip(t.importances(d)) {
                *a += w;
            }
        }
        normalize(&mut acc);
        Ok(self.feature_names.iter().cloned().zip(acc).collect())
    }
}
