use serde::{Deserialize, Serialize};

use super::{mean_std, FeatureMatrix, PipelineError, COL_MAX_LOAD, COL_MAX_POSITION, COL_STRAIN, COL_STRESS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub column: String,
    pub mean: f64,
    /// Sample standard deviation (n-1); 0 for a single row.
    pub stddev: f64,
    pub min: f64,
    pub max: f64,
}

/// Summary statistics of every measured and derived numeric column,
/// sorted by standard deviation, largest first (stable for ties).
pub fn describe(matrix: &FeatureMatrix) -> Result<Vec<ColumnStats>, PipelineError> {
    if matrix.rows.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let mut names = vec![COL_MAX_LOAD.to_owned(), COL_MAX_POSITION.to_owned()];
    names.extend(matrix.dimensional_columns.iter().cloned());
    names.extend([COL_STRESS, COL_STRAIN].map(str::to_owned));
    let mut stats: Vec<ColumnStats> = names
        .into_iter()
        .map(|column| {
            let v = matrix.column(&column).expect("known column");
            let (mean, stddev) = mean_std(&v).unwrap_or((v[0], 0.0));
            ColumnStats {
                column,
                mean,
                stddev,
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    stats.sort_by(|a, b| b.stddev.total_cmp(&a.stddev));
    Ok(stats)
}
