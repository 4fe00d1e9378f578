use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{
    Dataset, PipelineConfig, PipelineError, COL_BOLT_ID, COL_FAILURE, COL_MAX_LOAD,
    COL_MAX_POSITION, COL_STRAIN, COL_STRESS, COL_TEST_NUM,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub bolt_id: String,
    pub test_num: u32,
    pub max_load: f64,
    pub max_position: f64,
    pub dimensional: Vec<f64>,
    /// psi
    pub stress: f64,
    pub strain: f64,
    pub failure: bool,
}

impl FeatureRow {
    pub fn rederive(&mut self, config: &PipelineConfig) {
        self.stress = self.max_load / config.area;
        self.strain = self.max_position / config.initial_length;
    }
}

/// Model-ready table. Column order in CSV form: `bolt_id, test_num,
/// max_load, max_position, <dimensional...>, stress, strain, failure`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub dimensional_columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureMatrix {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec![
            COL_BOLT_ID.to_owned(),
            COL_TEST_NUM.to_owned(),
            COL_MAX_LOAD.to_owned(),
            COL_MAX_POSITION.to_owned(),
        ];
        h.extend(self.dimensional_columns.iter().cloned());
        h.extend([COL_STRESS, COL_STRAIN, COL_FAILURE].map(str::to_owned));
        h
    }

    /// Columns used as classifier inputs. Stress and strain are exact
    /// rescalings of load and position, so they are left out to keep
    /// importances from being split between identical signals.
    pub fn model_feature_names(&self) -> Vec<String> {
        let mut names = vec![COL_MAX_LOAD.to_owned(), COL_MAX_POSITION.to_owned()];
        names.extend(self.dimensional_columns.iter().cloned());
        names
    }

    pub fn model_features(row: &FeatureRow) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 + row.dimensional.len());
        x.push(row.max_load);
        x.push(row.max_position);
        x.extend_from_slice(&row.dimensional);
        x
    }

    /// Values of a numeric column by name (`failure` as 0/1).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let get: Box<dyn Fn(&FeatureRow) -> f64> = match name {
            COL_TEST_NUM => Box::new(|r| r.test_num as f64),
            COL_MAX_LOAD => Box::new(|r| r.max_load),
            COL_MAX_POSITION => Box::new(|r| r.max_position),
            COL_STRESS => Box::new(|r| r.stress),
            COL_STRAIN => Box::new(|r| r.strain),
            COL_FAILURE => Box::new(|r| f64::from(u8::from(r.failure))),
            other => {
                let i = self.dimensional_columns.iter().position(|c| c == other)?;
                Box::new(move |r| r.dimensional[i])
            }
        };
        Some(self.rows.iter().map(get).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![
                r.bolt_id.clone(),
                r.test_num.to_string(),
                r.max_load.to_string(),
                r.max_position.to_string(),
            ];
            rec.extend(r.dimensional.iter().map(f64::to_string));
            rec.push(r.stress.to_string());
            rec.push(r.strain.to_string());
            rec.push(u8::from(r.failure).to_string());
            w.write_record(rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Inverse of [`FeatureMatrix::to_csv`]; numbers round-trip exactly.
    pub fn from_csv(text: &str) -> Result<Self, PipelineError> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| PipelineError::Io(format!("header: {e}")))?
            .iter()
            .map(str::to_owned)
            .collect();
        let fixed_head = [COL_BOLT_ID, COL_TEST_NUM, COL_MAX_LOAD, COL_MAX_POSITION];
        let fixed_tail = [COL_STRESS, COL_STRAIN, COL_FAILURE];
        for (i, name) in fixed_head.iter().enumerate() {
            if header.get(i).map(String::as_str) != Some(*name) {
                return Err(PipelineError::MissingColumn((*name).to_owned()));
            }
        }
        if header.len() < 7 {
            return Err(PipelineError::MissingColumn(COL_FAILURE.to_owned()));
        }
        let tail = header.len() - 3;
        for (i, name) in fixed_tail.iter().enumerate() {
            if header[tail + i] != *name {
                return Err(PipelineError::MissingColumn((*name).to_owned()));
            }
        }
        let dimensional_columns = header[4..tail].to_vec();
        let mut rows = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| PipelineError::Io(format!("row {}: {e}", row + 1)))?;
            let num = |i: usize| -> Result<f64, PipelineError> {
                rec[i].parse().map_err(|_| PipelineError::InvalidCell {
                    row: row + 1,
                    column: header[i].clone(),
                    reason: format!("`{}` is not a number", &rec[i]),
                })
            };
            let failure = match &rec[tail + 2] {
                "1" => true,
                "0" => false,
                other => {
                    return Err(PipelineError::InvalidCell {
                        row: row + 1,
                        column: COL_FAILURE.into(),
                        reason: format!("`{other}` is not 0 or 1"),
                    })
                }
            };
            rows.push(FeatureRow {
                bolt_id: rec[0].to_owned(),
                test_num: num(1)? as u32,
                max_load: num(2)?,
                max_position: num(3)?,
                dimensional: (4..tail).map(num).collect::<Result<_, _>>()?,
                stress: num(tail)?,
                strain: num(tail + 1)?,
                failure,
            });
        }
        Ok(Self {
            dimensional_columns,
            rows,
        })
    }
}

/// Compute stress and strain and the 0/1 failure label. Fracture rows
/// without measurements inherit the bolt's last observed values.
pub fn engineer_features(
    dataset: &Dataset,
    config: &PipelineConfig,
) -> Result<FeatureMatrix, PipelineError> {
    config.validate()?;
    // Last observed (load, position) per bolt, keyed by the test number
    // they came from.
    let mut order: Vec<usize> = (0..dataset.records.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&dataset.records[a], &dataset.records[b]);
        (&ra.bolt_id, ra.test_num).cmp(&(&rb.bolt_id, rb.test_num))
    });
    let mut resolved: Vec<Option<(f64, f64)>> = vec![None; dataset.records.len()];
    let mut last: HashMap<&str, (Option<f64>, Option<f64>)> = HashMap::new();
    for &r in &order {
        let rec = &dataset.records[r];
        let prev = last.entry(&rec.bolt_id).or_default();
        let missing = |column: &str| PipelineError::MissingMeasurement {
            bolt_id: rec.bolt_id.clone(),
            test_num: rec.test_num,
            column: column.to_owned(),
        };
        let pick = |own: Option<f64>, inherited: Option<f64>, column: &str| match own {
            Some(v) => Ok(v),
            None if rec.fracture => inherited.ok_or_else(|| missing(column)),
            None => Err(missing(column)),
        };
        let load = pick(rec.max_load, prev.0, COL_MAX_LOAD)?;
        let pos = pick(rec.max_position, prev.1, COL_MAX_POSITION)?;
        if rec.max_load.is_some() {
            prev.0 = rec.max_load;
        }
        if rec.max_position.is_some() {
            prev.1 = rec.max_position;
        }
        resolved[r] = Some((load, pos));
    }

    let mut rows = Vec::with_capacity(dataset.records.len());
    for (rec, vals) in dataset.records.iter().zip(resolved) {
        if rec.fracture && config.drop_fracture_rows {
            continue;
        }
        let (max_load, max_position) = vals.expect("every record resolved");
        let dimensional = rec
            .dimensional
            .iter()
            .zip(&dataset.dimensional_columns)
            .map(|(v, col)| {
                v.ok_or_else(|| PipelineError::MissingMeasurement {
                    bolt_id: rec.bolt_id.clone(),
                    test_num: rec.test_num,
                    column: col.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut row = FeatureRow {
            bolt_id: rec.bolt_id.clone(),
            test_num: rec.test_num,
            max_load,
            max_position,
            dimensional,
            stress: 0.0,
            strain: 0.0,
            failure: rec.fracture,
        };
        row.rederive(config);
        rows.push(row);
    }
    Ok(FeatureMatrix {
        dimensional_columns: dataset.dimensional_columns.clone(),
        rows,
    })
}
