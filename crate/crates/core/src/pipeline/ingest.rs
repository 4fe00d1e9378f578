use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{
    PipelineError, COL_BOLT_ID, COL_FRACTURE, COL_MAX_LOAD, COL_MAX_POSITION, COL_TEST_NUM,
    FAILURE_TOKEN,
};

/// Suffix of the measurement taken after rotating the bolt by 90 degrees.
pub const PARTNER_SUFFIX: &str = "_90";

/// One tensile test of one bolt, with the dimensional inspection taken
/// before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub bolt_id: String,
    pub test_num: u32,
    /// Peak force in lbf.
    pub max_load: Option<f64>,
    /// Elongation at peak in inches.
    pub max_position: Option<f64>,
    /// Aligned with [`Dataset::dimensional_columns`].
    pub dimensional: Vec<Option<f64>>,
    pub fracture: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub dimensional_columns: Vec<String>,
    pub records: Vec<TestRecord>,
}

impl Dataset {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.dimensional_columns.iter().position(|c| c == name)
    }

    /// Index of the paired column (`X` for `X_90` and vice versa).
    pub fn partner_index(&self, col: usize) -> Option<usize> {
        let name = &self.dimensional_columns[col];
        match name.strip_suffix(PARTNER_SUFFIX) {
            Some(base) => self.column_index(base),
            None => self.column_index(&format!("{name}{PARTNER_SUFFIX}")),
        }
    }
}

/// Parse tensile/dimensional CSV. Columns other than the five fixed ones
/// are dimensional and must come in `X` / `X_90` pairs.
pub fn ingest(csv_text: &str) -> Result<Dataset, PipelineError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(csv_text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| PipelineError::Io(format!("header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();

    let find = |name: &str| {
        header
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| PipelineError::MissingColumn(name.to_owned()))
    };
    let i_bolt = find(COL_BOLT_ID)?;
    let i_test = find(COL_TEST_NUM)?;
    let i_load = find(COL_MAX_LOAD)?;
    let i_pos = find(COL_MAX_POSITION)?;
    let i_frac = find(COL_FRACTURE)?;
    let fixed = [i_bolt, i_test, i_load, i_pos, i_frac];

    let dim_idx: Vec<usize> = (0..header.len()).filter(|i| !fixed.contains(i)).collect();
    let dimensional_columns: Vec<String> = dim_idx.iter().map(|&i| header[i].clone()).collect();
    let names: HashSet<&str> = dimensional_columns.iter().map(String::as_str).collect();
    for name in &dimensional_columns {
        let partner = match name.strip_suffix(PARTNER_SUFFIX) {
            Some(base) => base.to_owned(),
            None => format!("{name}{PARTNER_SUFFIX}"),
        };
        if !names.contains(partner.as_str()) {
            return Err(PipelineError::UnpairedDimensionalColumn(name.clone(), partner));
        }
    }

    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (row, rec) in reader.records().enumerate() {
        let row = row + 1;
        let rec = rec.map_err(|e| PipelineError::Io(format!("row {row}: {e}")))?;
        let cell = |i: usize| rec.get(i).unwrap_or("");
        let invalid = |i: usize, reason: String| PipelineError::InvalidCell {
            row,
            column: header[i].clone(),
            reason,
        };

        let bolt_id = cell(i_bolt).to_owned();
        if bolt_id.is_empty() {
            return Err(invalid(i_bolt, "empty bolt id".into()));
        }
        let test_num: u32 = cell(i_test)
            .parse()
            .ok()
            .filter(|&n| n >= 1)
            .ok_or_else(|| invalid(i_test, format!("`{}` is not a test number >= 1", cell(i_test))))?;

        let mut fracture = parse_bool(cell(i_frac)).ok_or_else(|| {
            invalid(i_frac, format!("`{}` is not a boolean", cell(i_frac)))
        })?;
        let mut measurement = |i: usize| -> Result<Option<f64>, PipelineError> {
            let s = cell(i);
            if s == FAILURE_TOKEN {
                fracture = true;
                return Ok(None);
            }
            parse_number(s).map_err(|reason| invalid(i, reason))
        };
        let max_load = measurement(i_load)?;
        let max_position = measurement(i_pos)?;
        let dimensional = dim_idx
            .iter()
            .map(|&i| parse_number(cell(i)).map_err(|reason| invalid(i, reason)))
            .collect::<Result<Vec<_>, _>>()?;

        if !seen.insert((bolt_id.clone(), test_num)) {
            return Err(PipelineError::DuplicateKey { bolt_id, test_num });
        }
        records.push(TestRecord {
            bolt_id,
            test_num,
            max_load,
            max_position,
            dimensional,
            fracture,
        });
    }

    let mut first_fracture: BTreeMap<&str, u32> = BTreeMap::new();
    for r in records.iter().filter(|r| r.fracture) {
        let e = first_fracture.entry(&r.bolt_id).or_insert(r.test_num);
        *e = (*e).min(r.test_num);
    }
    if let Some(r) = records.iter().find(|r| {
        first_fracture
            .get(r.bolt_id.as_str())
            .is_some_and(|&f| r.test_num > f)
    }) {
        return Err(PipelineError::SeriesAfterFracture {
            bolt_id: r.bolt_id.clone(),
            test_num: r.test_num,
            fracture_test: first_fracture[r.bolt_id.as_str()],
        });
    }

    Ok(Dataset {
        dimensional_columns,
        records,
    })
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" | "" => Some(false),
        _ => None,
    }
}

fn parse_number(s: &str) -> Result<Option<f64>, String> {
    if s.is_empty() {
        return Ok(None);
    }
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(Some(v))
}
