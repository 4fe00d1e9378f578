use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{normalize, MlError, Samples, SplitCriterion};

/// Decreases closer than this are ties and keep the earlier candidate.
pub(crate) const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature_index: usize,
        /// Samples with `x[feature_index] <= threshold` go left.
        threshold: f64,
        impurity: f64,
        n_samples: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class_label: usize,
        class_counts: Vec<usize>,
        impurity: f64,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64]) -> usize {
        self.leaf(x).0
    }

    /// Class label and counts of the leaf `x` lands in.
    pub fn leaf(&self, x: &[f64]) -> (usize, &[usize]) {
        let mut node = self;
        loop {
            match node {
                TreeNode::Internal {
                    feature_index,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature_index] <= *threshold { left } else { right },
                TreeNode::Leaf {
                    class_label,
                    class_counts,
                    ..
                } => return (*class_label, class_counts),
            }
        }
    }

    pub fn n_samples(&self) -> usize {
        match self {
            TreeNode::Internal { n_samples, .. } => *n_samples,
            TreeNode::Leaf { class_counts, .. } => class_counts.iter().sum(),
        }
    }

    pub fn impurity(&self) -> f64 {
        match self {
            TreeNode::Internal { impurity, .. } | TreeNode::Leaf { impurity, .. } => *impurity,
        }
    }

    /// Edges on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub fn max_feature_index(&self) -> Option<usize> {
        match self {
            TreeNode::Internal {
                feature_index,
                left,
                right,
                ..
            } => Some(
                (*feature_index)
                    .max(left.max_feature_index().unwrap_or(0))
                    .max(right.max_feature_index().unwrap_or(0)),
            ),
            TreeNode::Leaf { .. } => None,
        }
    }

    /// Sample-weighted impurity decrease per feature, normalized to sum 1
    /// (all zero for a tree without splits).
    pub fn importances(&self, n_features: usize) -> Vec<f64> {
        let mut acc = vec![0.0; n_features];
        let root = self.n_samples().max(1) as f64;
        self.accumulate(&mut acc, root);
        normalize(&mut acc);
        acc
    }

    fn accumulate(&self, acc: &mut [f64], root: f64) {
        if let TreeNode::Internal {
            feature_index,
            impurity,
            n_samples,
            left,
            right,
            ..
        } = self
        {
            let n = *n_samples as f64;
            let child = (left.n_samples() as f64 * left.impurity()
                + right.n_samples() as f64 * right.impurity())
                / n;
            acc[*feature_index] += n / root * (impurity - child).max(0.0);
            left.accumulate(acc, root);
            right.accumulate(acc, root);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub criterion: SplitCriterion,
    pub max_depth: usize,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            criterion: SplitCriterion::Gini,
            max_depth: 10,
            min_samples_split: 2,
        }
    }
}

/// Which features a node may split on.
pub enum FeatureSampler<'a, R: Rng> {
    All,
    /// `k` distinct features drawn afresh at every node.
    Random { k: usize, rng: &'a mut R },
}

impl<R: Rng> FeatureSampler<'_, R> {
    fn candidates(&mut self, d: usize) -> Vec<usize> {
        match self {
            FeatureSampler::All => (0..d).collect(),
            FeatureSampler::Random { k, rng } => {
                let mut f = index::sample(*rng, d, (*k).min(d)).into_vec();
                f.sort_unstable();
                f
            }
        }
    }
}

/// Greedy top-down growth over the rows in `indices` (repeats allowed).
pub fn grow_tree<R: Rng>(
    samples: &Samples,
    indices: &[usize],
    params: &TreeParams,
    sampler: &mut FeatureSampler<'_, R>,
) -> Result<TreeNode, MlError> {
    if indices.is_empty() {
        return Err(MlError::EmptyTrainingSet);
    }
    let mut idx = indices.to_vec();
    grow(samples, &mut idx, params, sampler, samples.n_classes(), 0)
}

fn class_counts(samples: &Samples, idx: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &i in idx {
        counts[samples.y[i]] += 1;
    }
    counts
}

fn leaf(counts: Vec<usize>, impurity: f64) -> TreeNode {
    // First maximum, i.e. ties go to the smaller label.
    let class_label = counts
        .iter()
        .enumerate()
        .fold((0, 0), |best, (k, &c)| if c > best.1 { (k, c) } else { best })
        .0;
    TreeNode::Leaf {
        class_label,
        class_counts: counts,
        impurity,
    }
}

struct Split {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

fn grow<R: Rng>(
    samples: &Samples,
    idx: &mut [usize],
    params: &TreeParams,
    sampler: &mut FeatureSampler<'_, R>,
    n_classes: usize,
    depth: usize,
) -> Result<TreeNode, MlError> {
    let counts = class_counts(samples, idx, n_classes);
    let impurity = params.criterion.impurity(&counts)?;
    let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
    if pure || depth >= params.max_depth || idx.len() < params.min_samples_split {
        return Ok(leaf(counts, impurity));
    }
    let features = sampler.candidates(samples.n_features());
    let Some(best) = best_split(samples, idx, &features, &counts, impurity, params.criterion)? else {
        return Ok(leaf(counts, impurity));
    };
    let n_samples = idx.len();
    let mid = partition(idx, |i| samples.x[i][best.feature] <= best.threshold);
    let (l, r) = idx.split_at_mut(mid);
    let left = grow(samples, l, params, sampler, n_classes, depth + 1)?;
    let right = grow(samples, r, params, sampler, n_classes, depth + 1)?;
    Ok(TreeNode::Internal {
        feature_index: best.feature,
        threshold: best.threshold,
        impurity,
        n_samples,
        left: Box::new(left),
        right: Box::new(right),
    })
}

/// Stable partition; returns the number of elements satisfying `pred`.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let (yes, no): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| pred(i));
    let mid = yes.len();
    for (slot, v) in idx.iter_mut().zip(yes.into_iter().chain(no)) {
        *slot = v;
    }
    mid
}

/// Midpoint between consecutive distinct values, kept strictly below `hi`
/// so that `hi` routes right.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

fn best_split(
    samples: &Samples,
    idx: &[usize],
    features: &[usize],
    parent: &[usize],
    parent_impurity: f64,
    criterion: SplitCriterion,
) -> Result<Option<Split>, MlError> {
    let n = idx.len() as f64;
    let mut best: Option<Split> = None;
    let mut order = idx.to_vec();
    for &f in features {
        let value = |i: usize| samples.x[i][f];
        order.sort_by(|&a, &b| value(a).total_cmp(&value(b)));
        let mut left = vec![0usize; parent.len()];
        for k in 0..order.len() - 1 {
            left[samples.y[order[k]]] += 1;
            let (lo, hi) = (value(order[k]), value(order[k + 1]));
            if lo == hi {
                continue;
            }
            let right: Vec<usize> = parent.iter().zip(&left).map(|(p, l)| p - l).collect();
            let nl = (k + 1) as f64;
            let child = nl / n * criterion.impurity(&left)?
                + (n - nl) / n * criterion.impurity(&right)?;
            let decrease = parent_impurity - child;
            let threshold = midpoint(lo, hi);
            let better = match &best {
                None => decrease > TIE_EPS,
                Some(b) => decrease > b.decrease + TIE_EPS,
            };
            if better {
                best = Some(Split {
                    feature: f,
                    threshold,
                    decrease,
                });
            }
        }
    }
    Ok(best)
}

/// Single CART tree over all features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub feature_names: Vec<String>,
    pub n_classes: usize,
    pub criterion: SplitCriterion,
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn train(samples: &Samples, params: &TreeParams) -> Result<Self, MlError> {
        let indices: Vec<usize> = (0..samples.len()).collect();
        let root = grow_tree(
            samples,
            &indices,
            params,
            &mut FeatureSampler::<rand_chacha::ChaCha8Rng>::All,
        )?;
        Ok(Self {
            feature_names: samples.feature_names.clone(),
            n_classes: samples.n_classes(),
            criterion: params.criterion,
            root,
        })
    }

    fn check(&self, x: &[f64]) -> Result<(), MlError> {
        if x.len() != self.feature_names.len() {
            return Err(MlError::ArityMismatch {
                expected: self.feature_names.len(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, MlError> {
        self.check(x)?;
        Ok(self.root.predict(x))
    }

    /// Fraction of training samples of `class` in the leaf `x` reaches.
    pub fn class_probability(&self, x: &[f64], class: usize) -> Result<f64, MlError> {
        self.check(x)?;
        let (_, counts) = self.root.leaf(x);
        let n: usize = counts.iter().sum();
        Ok(counts.get(class).copied().unwrap_or(0) as f64 / n.max(1) as f64)
    }

    pub fn feature_importances(&self) -> Vec<(String, f64)> {
        self.feature_names
            .iter()
            .cloned()
            .zip(self.root.importances(self.feature_names.len()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_feature(points: &[(f64, usize)]) -> Samples {
        Samples::new(
            vec!["x".into()],
            points.iter().map(|p| vec![p.0]).collect(),
            points.iter().map(|p| p.1).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_class_is_a_leaf() {
        let s = one_feature(&[(0.0, 1), (1.0, 1), (2.0, 1)]);
        let t = DecisionTree::train(&s, &TreeParams::default()).unwrap();
        assert_eq!(t.root.depth(), 0);
        assert_eq!(t.predict(&[5.0]).unwrap(), 1);
        assert!(t.feature_importances().iter().all(|(_, w)| *w == 0.0));
    }

    #[test]
    fn separable_data_splits_at_midpoint() {
        let s = one_feature(&[(0.0, 0), (1.0, 0), (2.0, 1), (3.0, 1)]);
        let t = DecisionTree::train(&s, &TreeParams::default()).unwrap();
        match &t.root {
            TreeNode::Internal {
                feature_index,
                threshold,
                left,
                right,
                ..
            } => {
                assert_eq!((*feature_index, *threshold), (0, 1.5));
                assert!(matches!(**left, TreeNode::Leaf { class_label: 0, .. }));
                assert!(matches!(**right, TreeNode::Leaf { class_label: 1, .. }));
            }
            other => panic!("expected a split, got {other:?}"),
        }
        assert_eq!(t.feature_importances(), [("x".to_owned(), 1.0)]);
        assert_eq!(t.predict(&[1.5]).unwrap(), 0);
        assert_eq!(t.predict(&[1.6]).unwrap(), 1);
        assert!(matches!(t.predict(&[1.0, 2.0]), Err(MlError::ArityMismatch { .. })));
    }

    #[test]
    fn depth_limit() {
        let pts: Vec<(f64, usize)> = (0..20).map(|i| (i as f64, i % 2)).collect();
        let s = one_feature(&pts);
        let p = TreeParams {
            max_depth: 1,
            ..Default::default()
        };
        assert!(DecisionTree::train(&s, &p).unwrap().root.depth() <= 1);
        let full = DecisionTree::train(&s, &TreeParams { max_depth: 30, ..p }).unwrap();
        assert!(pts.iter().all(|(x, y)| full.predict(&[*x]).unwrap() == *y));
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        // Both features separate the classes equally well.
        let s = Samples::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 10.0], vec![1.0, 11.0], vec![2.0, 12.0], vec![3.0, 13.0]],
            vec![0, 0, 1, 1],
        )
        .unwrap();
        let t = DecisionTree::train(&s, &TreeParams::default()).unwrap();
        assert!(matches!(t.root, TreeNode::Internal { feature_index: 0, .. }));
    }

    #[test]
    fn midpoint_between_adjacent_floats() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert_eq!(midpoint(lo, hi), lo);
        assert_eq!(midpoint(1.0, 2.0), 1.5);
    }

    #[test]
    fn empty_training_set() {
        let s = one_feature(&[(0.0, 0)]);
        assert_eq!(
            grow_tree(&s, &[], &TreeParams::default(), &mut FeatureSampler::<rand_chacha::ChaCha8Rng>::All),
            Err(MlError::EmptyTrainingSet)
        );
    }

    #[test]
    fn leaf_ties_go_to_smaller_label() {
        let s = one_feature(&[(0.0, 1), (0.0, 0)]);
        let t = DecisionTree::train(&s, &TreeParams::default()).unwrap();
        assert_eq!(t.predict(&[0.0]).unwrap(), 0);
        assert_eq!(t.class_probability(&[0.0], 1).unwrap(), 0.5);
    }
}
