use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Dataset, PipelineError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FillSource {
    /// Copied from the same row's rotated (or unrotated) twin column.
    Partner { column: String },
    /// Mean of the column over this many earlier tests of the same bolt.
    PriorMean { tests: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImputationFill {
    pub bolt_id: String,
    pub test_num: u32,
    pub column: String,
    pub value: f64,
    pub source: FillSource,
}

/// Fill dimensional gaps: first from the paired `_90` column of the same
/// row, then from the bolt's earlier tests. Idempotent.
pub fn impute_missing(dataset: &Dataset) -> Result<(Dataset, Vec<ImputationFill>), PipelineError> {
    let mut out = dataset.clone();
    let mut report = Vec::new();
    let cols = &dataset.dimensional_columns;

    for (r, rec) in out.records.iter_mut().enumerate() {
        let original = &dataset.records[r].dimensional;
        for c in 0..cols.len() {
            if original[c].is_some() {
                continue;
            }
            let p = dataset.partner_index(c).expect("ingest guarantees pairing");
            if let Some(v) = original[p] {
                rec.dimensional[c] = Some(v);
                report.push(ImputationFill {
                    bolt_id: rec.bolt_id.clone(),
                    test_num: rec.test_num,
                    column: cols[c].clone(),
                    value: v,
                    source: FillSource::Partner {
                        column: cols[p].clone(),
                    },
                });
            }
        }
    }

    // Remaining gaps have both members missing. Walk each bolt in test
    // order so earlier fills are visible to later ones.
    let mut order: Vec<usize> = (0..out.records.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&out.records[a], &out.records[b]);
        (&ra.bolt_id, ra.test_num).cmp(&(&rb.bolt_id, rb.test_num))
    });
    let mut history: HashMap<String, Vec<usize>> = HashMap::new();
    for &r in &order {
        let prior = history.entry(out.records[r].bolt_id.clone()).or_default();
        for c in 0..cols.len() {
            if out.records[r].dimensional[c].is_some() {
                continue;
            }
            let values: Vec<f64> = prior
                .iter()
                .filter_map(|&q| out.records[q].dimensional[c])
                .collect();
            let rec = &out.records[r];
            if values.is_empty() {
                return Err(PipelineError::UnimputableCell {
                    bolt_id: rec.bolt_id.clone(),
                    test_num: rec.test_num,
                    column: cols[c].clone(),
                });
            }
            let value = values.iter().sum::<f64>() / values.len() as f64;
            report.push(ImputationFill {
                bolt_id: rec.bolt_id.clone(),
                test_num: rec.test_num,
                column: cols[c].clone(),
                value,
                source: FillSource::PriorMean {
                    tests: values.len(),
                },
            });
            out.records[r].dimensional[c] = Some(value);
        }
        prior.push(r);
    }
    Ok((out, report))
}
