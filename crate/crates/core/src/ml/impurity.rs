use serde::{Deserialize, Serialize};

use super::MlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitCriterion {
    #[default]
    Gini,
    Entropy,
}

impl SplitCriterion {
    pub fn impurity(self, counts: &[usize]) -> Result<f64, MlError> {
        match self {
            SplitCriterion::Gini => gini(counts),
            SplitCriterion::Entropy => entropy(counts),
        }
    }
}

fn total(counts: &[usize]) -> Result<f64, MlError> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(MlError::EmptyNode);
    }
    Ok(n as f64)
}

/// `1 - Σ p_i²`
pub fn gini(counts: &[usize]) -> Result<f64, MlError> {
    let n = total(counts)?;
    let sum_sq: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            p * p
        })
        .sum();
    Ok((1.0 - sum_sq).max(0.0))
}

/// `-Σ p_i log2 p_i`, with `0 log 0 = 0`.
pub fn entropy(counts: &[usize]) -> Result<f64, MlError> {
    let n = total(counts)?;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    Ok(h.max(0.0))
}

/// Parent entropy minus the size-weighted entropy of the children.
pub fn information_gain(parent: &[usize], children: &[&[usize]]) -> Result<f64, MlError> {
    let n = total(parent)?;
    let classes = children.iter().map(|c| c.len()).max().unwrap_or(0).max(parent.len());
    for k in 0..classes {
        let sum: usize = children.iter().map(|c| c.get(k).copied().unwrap_or(0)).sum();
        if sum != parent.get(k).copied().unwrap_or(0) {
            return Err(MlError::PartitionMismatch);
        }
    }
    let mut weighted = 0.0;
    for child in children {
        let m: usize = child.iter().sum();
        if m > 0 {
            weighted += m as f64 / n * entropy(child)?;
        }
    }
    Ok(entropy(parent)? - weighted)
}
