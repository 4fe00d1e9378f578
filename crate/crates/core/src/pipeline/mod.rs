//! Tensile-test data preparation: ingest, imputation, stress/strain
//! features, z-score outlier replacement, per-bolt bootstrap.

mod bootstrap;
mod describe;
mod features;
pub mod fixture;
mod impute;
mod ingest;
mod outliers;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bootstrap::{bootstrap_augment, virtual_bolt_id};
pub use describe::{describe, ColumnStats};
pub use features::{engineer_features, FeatureMatrix, FeatureRow};
pub use impute::{impute_missing, FillSource, ImputationFill};
pub use ingest::{ingest, Dataset, TestRecord, PARTNER_SUFFIX};
pub use outliers::{handle_outliers, OutlierReport, OutlierReplacement};

pub const COL_BOLT_ID: &str = "bolt_id";
pub const COL_TEST_NUM: &str = "test_num";
pub const COL_MAX_LOAD: &str = "max_load";
pub const COL_MAX_POSITION: &str = "max_position";
pub const COL_FRACTURE: &str = "fracture";
pub const COL_STRESS: &str = "stress";
pub const COL_STRAIN: &str = "strain";
pub const COL_FAILURE: &str = "failure";

/// Literal accepted in measurement cells for a test that broke the bolt.
pub const FAILURE_TOKEN: &str = "Failure";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("missing required column `{0}`")]
    MissingColumn(String),
    #[error("dimensional column `{0}` has no partner column `{1}`")]
    UnpairedDimensionalColumn(String, String),
    #[error("duplicate record for {bolt_id} test {test_num}")]
    DuplicateKey { bolt_id: String, test_num: u32 },
    #[error("{bolt_id} has test {test_num} after fracturing at test {fracture_test}")]
    SeriesAfterFracture {
        bolt_id: String,
        test_num: u32,
        fracture_test: u32,
    },
    #[error("row {row}, column `{column}`: {reason}")]
    InvalidCell {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("cannot impute `{column}` for {bolt_id} test {test_num}: no partner value and no prior tests")]
    UnimputableCell {
        bolt_id: String,
        test_num: u32,
        column: String,
    },
    #[error("{bolt_id} test {test_num} has no `{column}` and nothing to inherit")]
    MissingMeasurement {
        bolt_id: String,
        test_num: u32,
        column: String,
    },
    #[error("cross-section area must be positive, got {0}")]
    NonPositiveArea(f64),
    #[error("initial length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input has no rows")]
    EmptyInput,
    #[error("I/O error: {0}")]
    Io(String),
}

/// Data-preparation settings.
///
/// `area` and `initial_length` are not measured values: they default to
/// the nominal 1"-4 ACME thread (minor diameter 0.75 in) and a 4 in gauge
/// length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Cross-section in square inches.
    pub area: f64,
    /// Gauge length in inches.
    pub initial_length: f64,
    pub z_threshold: f64,
    pub bootstrap_bolts: usize,
    pub max_tests: usize,
    pub seed: u64,
    /// Drop fracture rows instead of letting them inherit measurements.
    pub drop_fracture_rows: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            area: std::f64::consts::PI * 0.375 * 0.375,
            initial_length: 4.0,
            z_threshold: 3.0,
            bootstrap_bolts: 100,
            max_tests: 11,
            seed: 42,
            drop_fracture_rows: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.area > 0.0 && self.area.is_finite()) {
            return Err(PipelineError::NonPositiveArea(self.area));
        }
        if !(self.initial_length > 0.0 && self.initial_length.is_finite()) {
            return Err(PipelineError::NonPositiveLength(self.initial_length));
        }
        if !(self.z_threshold > 0.0) {
            return Err(PipelineError::InvalidConfig(format!(
                "z_threshold must be positive, got {}",
                self.z_threshold
            )));
        }
        if self.bootstrap_bolts == 0 || self.max_tests == 0 {
            return Err(PipelineError::InvalidConfig(
                "bootstrap_bolts and max_tests must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Sample mean and (n-1) standard deviation. `None` for fewer than two values.
pub(crate) fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.len() < 2 {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}
