use serde::{Deserialize, Serialize};

use super::{mean_std, FeatureMatrix, PipelineConfig, PipelineError, COL_MAX_LOAD, COL_MAX_POSITION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReplacement {
    pub row: usize,
    pub bolt_id: String,
    pub test_num: u32,
    pub column: String,
    pub original: f64,
    pub replacement: f64,
    pub z: f64,
    /// True when the bolt had no earlier unflagged test and the column mean
    /// was used instead.
    pub column_mean_fallback: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub z_threshold: f64,
    pub replacements: Vec<OutlierReplacement>,
    /// Columns skipped because their standard deviation is zero.
    pub constant_columns: Vec<String>,
}

/// Replace values with `|z| > z_threshold` by the mean of the same bolt's
/// earlier unflagged tests. Detection runs on measured columns (load,
/// position, dimensional); stress and strain are then re-derived so they
/// stay exact.
pub fn handle_outliers(
    matrix: &FeatureMatrix,
    config: &PipelineConfig,
) -> Result<(FeatureMatrix, OutlierReport), PipelineError> {
    config.validate()?;
    let mut out = matrix.clone();
    let mut report = OutlierReport {
        z_threshold: config.z_threshold,
        ..Default::default()
    };
    let mut columns = vec![COL_MAX_LOAD.to_owned(), COL_MAX_POSITION.to_owned()];
    columns.extend(matrix.dimensional_columns.iter().cloned());

    for (c, name) in columns.iter().enumerate() {
        let values = matrix.column(name).expect("known column");
        let Some((mean, sd)) = mean_std(&values) else {
            continue;
        };
        if sd == 0.0 {
            report.constant_columns.push(name.clone());
            continue;
        }
        let z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
        let flagged: Vec<bool> = z.iter().map(|z| z.abs() > config.z_threshold).collect();
        if !flagged.contains(&true) {
            continue;
        }
        let clean: Vec<f64> = values
            .iter()
            .zip(&flagged)
            .filter(|(_, f)| !**f)
            .map(|(v, _)| *v)
            .collect();
        let clean_mean = clean.iter().sum::<f64>() / clean.len() as f64;

        for r in (0..values.len()).filter(|&r| flagged[r]) {
            let row = &matrix.rows[r];
            let prior: Vec<f64> = matrix
                .rows
                .iter()
                .enumerate()
                .filter(|(q, p)| {
                    !flagged[*q] && p.bolt_id == row.bolt_id && p.test_num < row.test_num
                })
                .map(|(q, _)| values[q])
                .collect();
            let (replacement, column_mean_fallback) = if prior.is_empty() {
                (clean_mean, true)
            } else {
                (prior.iter().sum::<f64>() / prior.len() as f64, false)
            };
            let target = &mut out.rows[r];
            match c {
                0 => target.max_load = replacement,
                1 => target.max_position = replacement,
                _ => target.dimensional[c - 2] = replacement,
            }
            report.replacements.push(OutlierReplacement {
                row: r,
                bolt_id: row.bolt_id.clone(),
                test_num: row.test_num,
                column: name.clone(),
                original: values[r],
                replacement,
                z: z[r],
                column_mean_fallback,
            });
        }
    }
    for row in &mut out.rows {
        row.rederive(config);
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{engineer_features, ingest};
    use proptest::prelude::*;

    fn matrix(positions: &[(&str, u32, f64)]) -> FeatureMatrix {
        let mut text = String::from("bolt_id,test_num,max_load,max_position,fracture,A,A_90\n");
        for (b, t, p) in positions {
            text.push_str(&format!("{b},{t},100,{p},false,1,1\n"));
        }
        engineer_features(&ingest(&text).unwrap(), &PipelineConfig::default()).unwrap()
    }

    #[test]
    fn constant_columns_are_skipped() {
        let m = matrix(&[("B", 1, 0.05), ("B", 2, 0.05), ("B", 3, 0.05)]);
        let (out, report) = handle_outliers(&m, &PipelineConfig::default()).unwrap();
        assert!(report.replacements.is_empty());
        assert_eq!(out, m);
        assert!(report.constant_columns.contains(&"max_load".to_owned()));
    }

    #[test]
    fn replaces_with_prior_mean_or_column_mean() {
        let mut rows: Vec<(&str, u32, f64)> = (1..=12).map(|t| ("B", t, 0.05 + t as f64 * 1e-3)).collect();
        rows[11].2 = 0.9;
        rows.push(("C", 1, 0.9));
        let m = matrix(&rows);
        let cfg = PipelineConfig {
            z_threshold: 2.0,
            ..Default::default()
        };
        let (out, report) = handle_outliers(&m, &cfg).unwrap();
        assert_eq!(report.replacements.len(), 2);
        let b = &report.replacements[0];
        let expected = (1..=11).map(|t| 0.05 + t as f64 * 1e-3).sum::<f64>() / 11.0;
        assert!((b.replacement - expected).abs() < 1e-15);
        assert!(!b.column_mean_fallback);
        let c = &report.replacements[1];
        assert!(c.column_mean_fallback);
        assert!((c.replacement - expected).abs() < 1e-15);
        assert_eq!(out.rows[11].strain, out.rows[11].max_position / cfg.initial_length);
    }

    proptest! {
        #[test]
        fn never_increases_max_abs_z(values in prop::collection::vec(-50.0f64..50.0, 3..40),
                                     spikes in prop::collection::vec((0usize..40, -1e4f64..1e4), 0..4)) {
            let mut values = values;
            for (i, v) in spikes {
                let n = values.len();
                values[i % n] = v;
            }
            let rows: Vec<(String, u32, f64)> = values
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("B{}", i % 3), (i / 3 + 1) as u32, *v))
                .collect();
            let refs: Vec<(&str, u32, f64)> = rows.iter().map(|(b, t, v)| (b.as_str(), *t, *v)).collect();
            let m = matrix(&refs);
            let cfg = PipelineConfig { z_threshold: 1.5, ..Default::default() };
            let (out, _) = handle_outliers(&m, &cfg).unwrap();
            let before = m.column("max_position").unwrap();
            let after = out.column("max_position").unwrap();
            if let Some((mean, sd)) = mean_std(&before) {
                if sd > 0.0 {
                    let zmax = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(((x - mean) / sd).abs()));
                    prop_assert!(zmax(&after) <= zmax(&before) + 1e-12);
                }
            }
            for (a, b) in out.rows.iter().zip(&m.rows) {
                prop_assert_eq!(a.failure, b.failure);
                prop_assert!((a.stress * cfg.area - a.max_load).abs() <= 1e-12 * a.max_load.abs());
            }
        }
    }
}
