//! End-to-end run: ingest → impute → engineer → outliers → bootstrap →
//! split → train both models → evaluate, with every artifact hashed into a
//! manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eval::{confusion, ClassificationReport, EvalError};
use crate::ml::{per_tree_seed, train_test_split, DecisionTree, Forest, MlError, Model, Samples, TrainConfig};
use crate::pipeline::{
    bootstrap_augment, describe, engineer_features, handle_outliers, impute_missing, ingest,
    ColumnStats, FeatureMatrix, FeatureRow, ImputationFill, OutlierReport, PipelineConfig,
    PipelineError,
};
use crate::predict::{FRACTURE_LABEL, NO_FRACTURE_LABEL};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FEATURE_MATRIX_FILE: &str = "feature_matrix.csv";
pub const TREE_MODEL_FILE: &str = "decision_tree.json";
pub const FOREST_MODEL_FILE: &str = "random_forest.json";

#[derive(Debug, Error)]
pub enum WorkflowError {
    #[error("{stage}: {source}")]
    Pipeline {
        stage: &'static str,
        source: PipelineError,
    },
    #[error("{stage}: {source}")]
    Ml { stage: &'static str, source: MlError },
    #[error("evaluate: {0}")]
    Eval(#[from] EvalError),
    #[error("I/O error: {0}")]
    Io(String),
}

impl WorkflowError {
    pub fn is_io(&self) -> bool {
        matches!(self, WorkflowError::Io(_))
    }
}

fn at_pipeline(stage: &'static str) -> impl FnOnce(PipelineError) -> WorkflowError {
    move |source| WorkflowError::Pipeline { stage, source }
}

fn at_ml(stage: &'static str) -> impl FnOnce(MlError) -> WorkflowError {
    move |source| WorkflowError::Ml { stage, source }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> WorkflowError {
    WorkflowError::Io(format!("{}: {e}", path.display()))
}

/// All settings of a run. `seed` is the single source of randomness:
/// bootstrap, split and forest seeds are derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub train: TrainConfig,
    /// Split the cleaned rows first and bootstrap only the training side,
    /// so no series appears in both sets.
    pub split_before_bootstrap: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            pipeline: PipelineConfig::default(),
            train: TrainConfig::default(),
            split_before_bootstrap: false,
        }
    }
}

/// Independent seed for one randomness consumer.
pub fn derive_seed(master: u64, stream: Stream) -> u64 {
    per_tree_seed(master, usize::MAX - stream as usize)
}

#[derive(Debug, Clone, Copy)]
pub enum Stream {
    Bootstrap = 1,
    Split = 2,
    Forest = 3,
}

impl RunConfig {
    pub fn pipeline_config(&self) -> PipelineConfig {
        PipelineConfig {
            seed: derive_seed(self.seed, Stream::Bootstrap),
            ..self.pipeline.clone()
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: derive_seed(self.seed, Stream::Forest),
            ..self.train.clone()
        }
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.seed, Stream::Split)
    }
}

/// Outputs of the cleaning stages, before any resampling.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ingested_rows: usize,
    pub fills: Vec<ImputationFill>,
    pub engineered: FeatureMatrix,
    pub cleaned: FeatureMatrix,
    pub outliers: OutlierReport,
    pub stats: Vec<ColumnStats>,
}

pub fn prepare(csv_text: &str, config: &PipelineConfig) -> Result<Prepared, WorkflowError> {
    config.validate().map_err(at_pipeline("config"))?;
    let dataset = ingest(csv_text).map_err(at_pipeline("ingest"))?;
    let (imputed, fills) = impute_missing(&dataset).map_err(at_pipeline("impute"))?;
    let engineered = engineer_features(&imputed, config).map_err(at_pipeline("engineer"))?;
    let (cleaned, outliers) = handle_outliers(&engineered, config).map_err(at_pipeline("outliers"))?;
    let stats = describe(&cleaned).map_err(at_pipeline("describe"))?;
    Ok(Prepared {
        ingested_rows: dataset.records.len(),
        fills,
        engineered,
        cleaned,
        outliers,
        stats,
    })
}

pub fn to_samples(matrix: &FeatureMatrix) -> Result<Samples, MlError> {
    Samples::new(
        matrix.model_feature_names(),
        matrix.rows.iter().map(FeatureMatrix::model_features).collect(),
        matrix.rows.iter().map(|r| usize::from(r.failure)).collect(),
    )
}

/// Evaluate with fracture as the positive class.
pub fn evaluate_model(model: &Model, test: &FeatureMatrix) -> Result<ClassificationReport, WorkflowError> {
    let samples = to_samples(test).map_err(at_ml("evaluate"))?;
    let predictions = samples
        .x
        .iter()
        .map(|x| model.predict(x))
        .collect::<Result<Vec<_>, _>>()
        .map_err(at_ml("evaluate"))?;
    let cm = confusion(&predictions, &samples.y, &1)?;
    Ok(ClassificationReport::new(cm, NO_FRACTURE_LABEL, FRACTURE_LABEL)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn digest(path: impl Into<String>, bytes: &[u8]) -> FileDigest {
    FileDigest {
        path: path.into(),
        sha256: hex::encode(Sha256::digest(bytes)),
        bytes: bytes.len() as u64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    pub model_file: String,
    pub accuracy: f64,
    pub off_diagonal: usize,
    pub top_features: Vec<(String, f64)>,
}

/// Provenance record written next to the artifacts of one command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config: RunConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Row counts per stage (`ingested`, `feature_rows`, `augmented`,
    /// `train`, `test`, `test_fracture`), where the command produced them.
    #[serde(default)]
    pub counts: BTreeMap<String, usize>,
    #[serde(default)]
    pub models: BTreeMap<String, ModelSummary>,
    pub timings_ms: BTreeMap<String, f64>,
    pub created_at: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            format_version: 1,
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            command: command.to_owned(),
            seed: config.seed,
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: BTreeMap::new(),
            models: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
            created_at: chrono::Utc::now().to_rfc3339(),
        }
    }

    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, WorkflowError> {
        let path = out_dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| io_err(&path, e))?;
        Ok(path)
    }

    fn count(&mut self, name: &str, n: usize) {
        self.counts.insert(name.to_owned(), n);
    }
}

/// Writes artifacts into one directory and records their digests.
pub struct ArtifactWriter {
    dir: PathBuf,
    outputs: Vec<FileDigest>,
}

impl ArtifactWriter {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self, WorkflowError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(Self {
            dir,
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, WorkflowError> {
        let path = self.dir.join(name);
        let bytes = bytes.as_ref();
        std::fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.outputs.push(digest(name, bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, WorkflowError> {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.write(name, text)
    }

    pub fn into_outputs(self) -> Vec<FileDigest> {
        self.outputs
    }
}

/// Report file names for a model file: `x.json` → `x.report.json`, `x.report.txt`.
pub fn report_paths(model_path: &Path) -> (PathBuf, PathBuf) {
    let stem = model_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("model");
    let dir = model_path.parent().unwrap_or(Path::new("."));
    (
        dir.join(format!("{stem}.report.json")),
        dir.join(format!("{stem}.report.txt")),
    )
}

fn sorted_importances(model: &Model) -> Result<Vec<(String, f64)>, WorkflowError> {
    let mut imp = model.feature_importances().map_err(at_ml("importances"))?;
    imp.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(imp)
}

/// Which classifiers a training command produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Tree,
    Forest,
    Both,
}

impl ModelChoice {
    fn includes_tree(self) -> bool {
        self != ModelChoice::Forest
    }

    fn includes_forest(self) -> bool {
        self != ModelChoice::Tree
    }
}

struct Timer {
    clock: Instant,
    laps: BTreeMap<String, f64>,
}

impl Timer {
    fn start() -> Self {
        Self {
            clock: Instant::now(),
            laps: BTreeMap::new(),
        }
    }

    fn lap(&mut self, name: &str) {
        self.laps.insert(name.to_owned(), self.clock.elapsed().as_secs_f64() * 1e3);
        self.clock = Instant::now();
    }
}

fn read_text(path: &Path) -> Result<(String, FileDigest), WorkflowError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    let d = digest(path.display().to_string(), &bytes);
    let text = String::from_utf8(bytes).map_err(|e| io_err(path, e))?;
    Ok((text, d))
}

/// Read a model file. A missing or unreadable file is an I/O error; a file
/// that does not hold a valid model is a model error.
pub fn load_model(path: &Path) -> Result<(Model, FileDigest), WorkflowError> {
    let (text, d) = read_text(path)?;
    let model = Model::from_json(&text).map_err(at_ml("load model"))?;
    Ok((model, d))
}

pub fn load_matrix(path: &Path) -> Result<(FeatureMatrix, FileDigest), WorkflowError> {
    let (text, d) = read_text(path)?;
    let matrix = FeatureMatrix::from_csv(&text).map_err(at_pipeline("load matrix"))?;
    Ok((matrix, d))
}

fn write_prepared(w: &mut ArtifactWriter, prepared: &Prepared) -> Result<(), WorkflowError> {
    w.write("cleaned_features.csv", prepared.cleaned.to_csv())?;
    w.write_json("imputation.json", &prepared.fills)?;
    w.write_json("outliers.json", &prepared.outliers)?;
    w.write_json("describe.json", &prepared.stats)?;
    Ok(())
}

/// Cleaning stages plus bootstrap, no split. Writes the cleaned rows, the
/// augmented matrix, the stage reports and a manifest.
pub fn run_prepare(input: &Path, config: &RunConfig, out_dir: &Path) -> Result<RunManifest, WorkflowError> {
    let mut timer = Timer::start();
    let mut manifest = RunManifest::new("prepare", config);
    let (text, d) = read_text(input)?;
    manifest.inputs.push(d);
    let pcfg = config.pipeline_config();
    let prepared = prepare(&text, &pcfg)?;
    let augmented = bootstrap_augment(&prepared.cleaned, &pcfg).map_err(at_pipeline("bootstrap"))?;
    timer.lap("prepare");

    let mut w = ArtifactWriter::new(out_dir)?;
    write_prepared(&mut w, &prepared)?;
    w.write(FEATURE_MATRIX_FILE, augmented.to_csv())?;
    manifest.outputs = w.into_outputs();
    manifest.count("ingested", prepared.ingested_rows);
    manifest.count("feature_rows", prepared.cleaned.rows.len());
    manifest.count("augmented", augmented.rows.len());
    manifest.timings_ms = timer.laps;
    manifest.write(out_dir)?;
    Ok(manifest)
}

struct Trained {
    tree: Option<Model>,
    forest: Option<Model>,
}

impl Trained {
    fn models(&self) -> impl Iterator<Item = (&'static str, &Model)> {
        [(TREE_MODEL_FILE, self.tree.as_ref()), (FOREST_MODEL_FILE, self.forest.as_ref())]
            .into_iter()
            .filter_map(|(f, m)| m.map(|m| (f, m)))
    }
}

fn train_models(
    train: &FeatureMatrix,
    tcfg: &TrainConfig,
    choice: ModelChoice,
    timer: &mut Timer,
) -> Result<Trained, WorkflowError> {
    let samples = to_samples(train).map_err(at_ml("train"))?;
    let mut out = Trained {
        tree: None,
        forest: None,
    };
    if choice.includes_tree() {
        let t = DecisionTree::train(&samples, &tcfg.tree_params()).map_err(at_ml("train"))?;
        out.tree = Some(Model::DecisionTree(t));
        timer.lap("train_decision_tree");
    }
    if choice.includes_forest() {
        out.forest = Some(Model::RandomForest(Forest::train(&samples, tcfg).map_err(at_ml("train"))?));
        timer.lap("train_random_forest");
    }
    Ok(out)
}

fn split_matrix(
    matrix: &FeatureMatrix,
    config: &RunConfig,
) -> Result<(FeatureMatrix, FeatureMatrix), WorkflowError> {
    let (train, test) = train_test_split(&matrix.rows, config.train.test_fraction, config.split_seed())
        .map_err(at_ml("split"))?;
    Ok((with_rows(matrix, train), with_rows(matrix, test)))
}

/// Split an augmented matrix (as written by [`run_prepare`]) and train.
/// Writes the two halves, the model files, their importances and a
/// manifest. With the same seed this reproduces the models of [`run_all`].
pub fn run_train(
    matrix_path: &Path,
    config: &RunConfig,
    choice: ModelChoice,
    out_dir: &Path,
) -> Result<RunManifest, WorkflowError> {
    let mut timer = Timer::start();
    let mut manifest = RunManifest::new("train", config);
    let tcfg = config.train_config();
    tcfg.validate().map_err(at_ml("config"))?;
    let (matrix, d) = load_matrix(matrix_path)?;
    manifest.inputs.push(d);
    let (train, test) = split_matrix(&matrix, config)?;
    timer.lap("split");
    let trained = train_models(&train, &tcfg, choice, &mut timer)?;

    let mut w = ArtifactWriter::new(out_dir)?;
    w.write("train.csv", train.to_csv())?;
    w.write("test.csv", test.to_csv())?;
    let mut importances = BTreeMap::new();
    for (file, model) in trained.models() {
        w.write(file, model.to_json())?;
        importances.insert(model.kind().to_owned(), sorted_importances(model)?);
    }
    w.write_json("importances.json", &importances)?;
    manifest.outputs = w.into_outputs();
    manifest.count("augmented", matrix.rows.len());
    manifest.count("train", train.rows.len());
    manifest.count("test", test.rows.len());
    manifest.timings_ms = timer.laps;
    manifest.write(out_dir)?;
    Ok(manifest)
}

/// Score a saved model on a feature-matrix CSV and write its report pair.
pub fn run_evaluate(
    model_path: &Path,
    test_path: &Path,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<(ClassificationReport, RunManifest), WorkflowError> {
    let mut timer = Timer::start();
    let mut manifest = RunManifest::new("evaluate", config);
    let (model, md) = load_model(model_path)?;
    let (test, td) = load_matrix(test_path)?;
    manifest.inputs.extend([md, td]);
    let report = evaluate_model(&model, &test)?;
    timer.lap("evaluate");

    let mut w = ArtifactWriter::new(out_dir)?;
    let (rj, rt) = report_paths(Path::new(&file_name(model_path)));
    w.write(&file_name(&rj), format!("{}\n", report.to_json()))?;
    w.write(&file_name(&rt), report.to_text())?;
    manifest.outputs = w.into_outputs();
    manifest.count("test", test.rows.len());
    manifest.count("test_fracture", test.rows.iter().filter(|r| r.failure).count());
    manifest.models.insert(model.kind().to_owned(), summary(&file_name(model_path), &model, &report)?);
    manifest.timings_ms = timer.laps;
    manifest.write(out_dir)?;
    Ok((report, manifest))
}

fn summary(file: &str, model: &Model, report: &ClassificationReport) -> Result<ModelSummary, WorkflowError> {
    Ok(ModelSummary {
        model_file: file.to_owned(),
        accuracy: report.accuracy.value,
        off_diagonal: report.confusion.fp + report.confusion.fn_,
        top_features: sorted_importances(model)?.into_iter().take(5).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub prepared: Prepared,
    pub reports: BTreeMap<String, ClassificationReport>,
    pub importances: BTreeMap<String, Vec<(String, f64)>>,
}

/// Run every stage on the CSV at `input` and write artifacts to `out_dir`.
/// Apart from `manifest.json` (timings, timestamp) all outputs are a pure
/// function of the input bytes and `config`.
pub fn run_all(input: &Path, config: &RunConfig, out_dir: &Path) -> Result<RunOutcome, WorkflowError> {
    let mut timer = Timer::start();
    let mut manifest = RunManifest::new("run-all", config);
    let (text, d) = read_text(input)?;
    manifest.inputs.push(d);
    let pcfg = config.pipeline_config();
    let tcfg = config.train_config();
    tcfg.validate().map_err(at_ml("config"))?;
    let prepared = prepare(&text, &pcfg)?;
    timer.lap("prepare");

    let (augmented, train, test) = if config.split_before_bootstrap {
        let (train, test) = split_matrix(&prepared.cleaned, config)?;
        let boot = bootstrap_augment(&train, &pcfg).map_err(at_pipeline("bootstrap"))?;
        (boot.clone(), boot, test)
    } else {
        let boot = bootstrap_augment(&prepared.cleaned, &pcfg).map_err(at_pipeline("bootstrap"))?;
        let (train, test) = split_matrix(&boot, config)?;
        (boot, train, test)
    };
    timer.lap("bootstrap_split");

    let trained = train_models(&train, &tcfg, ModelChoice::Both, &mut timer)?;

    let mut w = ArtifactWriter::new(out_dir)?;
    write_prepared(&mut w, &prepared)?;
    w.write(FEATURE_MATRIX_FILE, augmented.to_csv())?;
    w.write("train.csv", train.to_csv())?;
    w.write("test.csv", test.to_csv())?;

    let mut reports = BTreeMap::new();
    let mut importances = BTreeMap::new();
    for (file, model) in trained.models() {
        let path = w.write(file, model.to_json())?;
        let report = evaluate_model(model, &test)?;
        let (rj, rt) = report_paths(&path);
        w.write(&file_name(&rj), format!("{}\n", report.to_json()))?;
        w.write(&file_name(&rt), report.to_text())?;
        let kind = model.kind().to_owned();
        manifest.models.insert(kind.clone(), summary(file, model, &report)?);
        importances.insert(kind.clone(), sorted_importances(model)?);
        reports.insert(kind, report);
    }
    w.write_json("importances.json", &importances)?;
    timer.lap("evaluate_write");

    manifest.outputs = w.into_outputs();
    manifest.count("ingested", prepared.ingested_rows);
    manifest.count("feature_rows", prepared.cleaned.rows.len());
    manifest.count("augmented", augmented.rows.len());
    manifest.count("train", train.rows.len());
    manifest.count("test", test.rows.len());
    manifest.count("test_fracture", test.rows.iter().filter(|r| r.failure).count());
    manifest.timings_ms = timer.laps;
    manifest.write(out_dir)?;

    Ok(RunOutcome {
        manifest,
        prepared,
        reports,
        importances,
    })
}

fn with_rows(template: &FeatureMatrix, rows: Vec<FeatureRow>) -> FeatureMatrix {
    FeatureMatrix {
        dimensional_columns: template.dimensional_columns.clone(),
        rows,
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .and_then(|s| s.to_str())
        .unwrap_or("model.json")
        .to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_distinct() {
        let s = [Stream::Bootstrap, Stream::Split, Stream::Forest].map(|k| derive_seed(42, k));
        assert!(s[0] != s[1] && s[1] != s[2] && s[0] != s[2]);
        assert_ne!(derive_seed(42, Stream::Split), derive_seed(43, Stream::Split));
    }

    #[test]
    fn report_paths_sit_next_to_model() {
        let (j, t) = report_paths(Path::new("out/random_forest.json"));
        assert_eq!(j, Path::new("out/random_forest.report.json"));
        assert_eq!(t, Path::new("out/random_forest.report.txt"));
    }

    #[test]
    fn config_json_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"seed": 7, "train": {"n_trees": 10}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.train.n_trees, 10);
        assert_eq!(c.pipeline, PipelineConfig::default());
    }
}
