use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FeatureMatrix, FeatureRow, PipelineConfig, PipelineError};

/// Id of the `index`-th (0-based) synthesized bolt.
pub fn virtual_bolt_id(index: usize, total: usize) -> String {
    let width = total.to_string().len().max(3);
    format!("Bolt_V{:0width$}", index + 1)
}

/// Whole test series of each bolt, in order of first appearance.
pub(crate) fn series(matrix: &FeatureMatrix) -> Vec<Vec<&FeatureRow>> {
    let mut ids: Vec<&str> = Vec::new();
    let mut groups: Vec<Vec<&FeatureRow>> = Vec::new();
    for row in &matrix.rows {
        match ids.iter().position(|id| *id == row.bolt_id) {
            Some(i) => groups[i].push(row),
            None => {
                ids.push(&row.bolt_id);
                groups.push(vec![row]);
            }
        }
    }
    for g in &mut groups {
        g.sort_by_key(|r| r.test_num);
    }
    groups
}

/// Synthesize `config.bootstrap_bolts` virtual bolts, each a copy of one
/// original bolt's full series drawn uniformly with replacement. Output
/// contains only the virtual bolts.
pub fn bootstrap_augment(
    matrix: &FeatureMatrix,
    config: &PipelineConfig,
) -> Result<FeatureMatrix, PipelineError> {
    config.validate()?;
    let groups = series(matrix);
    if groups.is_empty() {
        return Err(PipelineError::EmptyInput);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for i in 0..config.bootstrap_bolts {
        let source = &groups[rng.random_range(0..groups.len())];
        let id = virtual_bolt_id(i, config.bootstrap_bolts);
        rows.extend(source.iter().take(config.max_tests).map(|r| FeatureRow {
            bolt_id: id.clone(),
            ..(*r).clone()
        }));
    }
    Ok(FeatureMatrix {
        dimensional_columns: matrix.dimensional_columns.clone(),
        rows,
    })
}
