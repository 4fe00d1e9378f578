//! `boltwin`: one binary for the whole inspection-to-prediction workflow.
//!
//! Exit codes: 0 success, 1 validation or model failure, 2 I/O or usage
//! error.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use boltwin_core::geom::{
    check_containment, load_features, load_mesh, rotation_sweep, scan_deviation,
    ContainmentReport, GeomError, RotationVisibility, ScannerConfig,
};
use boltwin_core::ml::SplitCriterion;
use boltwin_core::pipeline::{impute_missing, ingest, ImputationFill};
use boltwin_core::predict::{predict_twin, PredictError};
use boltwin_core::twin::{PropertyMap, Scalar, SharedStore, StoreError, SystemClock};
use boltwin_core::workflow::{
    self, load_model, ModelChoice, RunConfig, WorkflowError,
};
use boltwin_service::AppState;

#[derive(Parser)]
#[command(name = "boltwin", version, about = "Bolt inspection, twin store and failure prediction")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run configuration (JSON); command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Tuning {
    /// Bolt cross-section for stress (in^2).
    #[arg(long, global = true)]
    area: Option<f64>,
    /// Gauge length for strain (in).
    #[arg(long = "l0", global = true)]
    l0: Option<f64>,
    /// Flag values whose |z| exceeds this.
    #[arg(long, global = true)]
    z_threshold: Option<f64>,
    /// Number of virtual bolts drawn by the bootstrap.
    #[arg(long, global = true)]
    bootstrap_bolts: Option<usize>,
    /// Drop fracture rows before engineering.
    #[arg(long, global = true)]
    drop_fracture_rows: bool,
    /// Split before bootstrapping so no series leaks into the test set.
    #[arg(long, global = true)]
    split_before_bootstrap: bool,
    /// Share of rows held out for testing.
    #[arg(long, global = true)]
    test_fraction: Option<f64>,
    /// Trees in the forest.
    #[arg(long, global = true)]
    n_trees: Option<usize>,
    #[arg(long, global = true)]
    max_depth: Option<usize>,
    #[arg(long, global = true, value_enum)]
    criterion: Option<CriterionArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    Gini,
    Entropy,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Tree,
    Forest,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Check a part mesh against the scanner volume and sensor coverage.
    ValidateGeometry {
        #[arg(long)]
        mesh: PathBuf,
        /// Scanner layout (JSON); the built-in cell is used when omitted.
        #[arg(long)]
        scanner: Option<PathBuf>,
        /// Critical features (CSV: label,x,y,z[,nx,ny,nz]).
        #[arg(long)]
        features: Option<PathBuf>,
        /// Scanned point cloud (mesh vertices) to compare against the part.
        #[arg(long)]
        scan: Option<PathBuf>,
        /// Largest allowed absolute scan deviation (mm).
        #[arg(long, requires = "scan")]
        tolerance: Option<f64>,
    },
    /// Parse and impute a test log; print a summary.
    Ingest { input: PathBuf },
    /// Clean, engineer and bootstrap a test log.
    Prepare { input: PathBuf },
    /// Split a prepared feature matrix and train classifiers.
    Train {
        matrix: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        model: ModelArg,
    },
    /// Score a saved model on a feature-matrix CSV.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        test: PathBuf,
    },
    /// Every stage from raw CSV to evaluated models.
    RunAll { input: PathBuf },
    /// Serve the twin store over HTTP until interrupted.
    Serve {
        #[arg(long, default_value = "twin-store")]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        /// Model used by the predict endpoint.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Predict fracture for a twin, or for property values in a JSON file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, conflicts_with_all = ["store", "twin"])]
        properties: Option<PathBuf>,
        #[arg(long, requires = "twin")]
        store: Option<PathBuf>,
        #[arg(long, requires = "store")]
        twin: Option<String>,
    },
}

#[derive(Debug)]
enum Failure {
    /// Input was read but failed validation, or a model could not be used.
    Invalid(String),
    /// Files, sockets or command-line usage.
    Io(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Io(_) => 2,
        }
    }
}

impl From<WorkflowError> for Failure {
    fn from(e: WorkflowError) -> Self {
        if e.is_io() {
            Failure::Io(e.to_string())
        } else {
            Failure::Invalid(e.to_string())
        }
    }
}

impl From<GeomError> for Failure {
    fn from(e: GeomError) -> Self {
        match e {
            GeomError::FeatureOutsideMesh(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Io(e.to_string()),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Io(_) => Failure::Io(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            let (Failure::Invalid(msg) | Failure::Io(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.exit_code())
        }
    }
}

fn run_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    let t = &cli.tuning;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(v) = t.area {
        cfg.pipeline.area = v;
    }
    if let Some(v) = t.l0 {
        cfg.pipeline.initial_length = v;
    }
    if let Some(v) = t.z_threshold {
        cfg.pipeline.z_threshold = v;
    }
    if let Some(v) = t.bootstrap_bolts {
        cfg.pipeline.bootstrap_bolts = v;
    }
    cfg.pipeline.drop_fracture_rows |= t.drop_fracture_rows;
    cfg.split_before_bootstrap |= t.split_before_bootstrap;
    if let Some(v) = t.test_fraction {
        cfg.train.test_fraction = v;
    }
    if let Some(v) = t.n_trees {
        cfg.train.n_trees = v;
    }
    if let Some(v) = t.max_depth {
        cfg.train.max_depth = v;
    }
    if let Some(c) = t.criterion {
        cfg.train.criterion = match c {
            CriterionArg::Gini => SplitCriterion::Gini,
            CriterionArg::Entropy => SplitCriterion::Entropy,
        };
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) {
    let text = serde_json::to_string_pretty(value).expect("output serializes");
    // A closed pipe (`| head`) is not an error worth reporting.
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn run(cli: Cli) -> CmdResult {
    let cfg = run_config(&cli)?;
    let out = cli.out_dir.as_path();
    match cli.command {
        Command::ValidateGeometry {
            mesh,
            scanner,
            features,
            scan,
            tolerance,
        } => validate_geometry(&mesh, scanner.as_deref(), features.as_deref(), scan.as_deref(), tolerance),
        Command::Ingest { input } => cmd_ingest(&input),
        Command::Prepare { input } => {
            let m = workflow::run_prepare(&input, &cfg, out)?;
            eprintln!("prepared {} rows into {}", m.counts["augmented"], out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Train { matrix, model } => {
            let choice = match model {
                ModelArg::Tree => ModelChoice::Tree,
                ModelArg::Forest => ModelChoice::Forest,
                ModelArg::Both => ModelChoice::Both,
            };
            let m = workflow::run_train(&matrix, &cfg, choice, out)?;
            eprintln!(
                "trained on {} rows, held out {} rows, wrote {}",
                m.counts["train"],
                m.counts["test"],
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Evaluate { model, test } => {
            let (report, _) = workflow::run_evaluate(&model, &test, &cfg, out)?;
            print!("{}", report.to_text());
            Ok(ExitCode::SUCCESS)
        }
        Command::RunAll { input } => {
            let outcome = workflow::run_all(&input, &cfg, out)?;
            let m = &outcome.manifest;
            println!(
                "rows: ingested {} augmented {} train {} test {}",
                m.counts["ingested"], m.counts["augmented"], m.counts["train"], m.counts["test"]
            );
            for (kind, s) in &m.models {
                let top: Vec<String> = s.top_features.iter().take(3).map(|(n, v)| format!("{n} {v:.3}")).collect();
                println!(
                    "{kind}: accuracy {:.4}, off-diagonal {}, top features: {}",
                    s.accuracy,
                    s.off_diagonal,
                    top.join(", ")
                );
            }
            println!("artifacts in {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { store, bind, model } => serve(&store, &bind, model.as_deref(), &cfg),
        Command::Predict {
            model,
            properties,
            store,
            twin,
        } => predict(&model, properties.as_deref(), store.as_deref(), twin.as_deref(), &cfg),
    }
}

#[derive(Serialize)]
struct DeviationSummary {
    points: usize,
    mean: f64,
    max: f64,
    rms: f64,
    tolerance: Option<f64>,
    within_tolerance: bool,
}

#[derive(Serialize)]
struct GeometryReport {
    passed: bool,
    triangles: usize,
    containment: ContainmentReport,
    rotation_steps: usize,
    features: Vec<RotationVisibility>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<DeviationSummary>,
}

fn validate_geometry(
    mesh_path: &Path,
    scanner: Option<&Path>,
    features: Option<&Path>,
    scan: Option<&Path>,
    tolerance: Option<f64>,
) -> CmdResult {
    let mesh = load_mesh(mesh_path)?;
    let scanner = match scanner {
        Some(p) => ScannerConfig::load(p)?,
        None => ScannerConfig::default(),
    };
    let features = match features {
        Some(p) => load_features(p)?,
        None => Vec::new(),
    };
    let containment = check_containment(&mesh, &scanner.cylinder)?;
    let visibility = if features.is_empty() {
        Vec::new()
    } else {
        rotation_sweep(&mesh, &features, &scanner.sensors, scanner.rotation_steps)?
    };
    let deviation = match scan {
        Some(p) => {
            let cloud = load_mesh(p)?;
            let r = scan_deviation(cloud.vertices(), &mesh)?;
            Some(DeviationSummary {
                points: r.distances.len(),
                mean: r.mean,
                max: r.max,
                rms: r.rms,
                tolerance,
                within_tolerance: tolerance.is_none_or(|t| r.max <= t),
            })
        }
        None => None,
    };
    let passed = containment.fully_inside
        && visibility.iter().all(|v| v.inspectable)
        && deviation.as_ref().is_none_or(|d| d.within_tolerance);
    print_json(&GeometryReport {
        passed,
        triangles: mesh.triangles().len(),
        containment,
        rotation_steps: scanner.rotation_steps,
        features: visibility,
        deviation,
    });
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct IngestSummary {
    rows: usize,
    bolts: usize,
    fracture_rows: usize,
    dimensional_columns: usize,
    missing_cells: usize,
    fills: Vec<ImputationFill>,
}

fn cmd_ingest(input: &Path) -> CmdResult {
    let text = std::fs::read_to_string(input).map_err(|e| Failure::Io(format!("{}: {e}", input.display())))?;
    let invalid = |e: boltwin_core::pipeline::PipelineError| Failure::Invalid(e.to_string());
    let dataset = ingest(&text).map_err(invalid)?;
    let (_, fills) = impute_missing(&dataset).map_err(invalid)?;
    let mut bolts: Vec<&str> = dataset.records.iter().map(|r| r.bolt_id.as_str()).collect();
    bolts.sort_unstable();
    bolts.dedup();
    print_json(&IngestSummary {
        rows: dataset.records.len(),
        bolts: bolts.len(),
        fracture_rows: dataset.records.iter().filter(|r| r.fracture).count(),
        dimensional_columns: dataset.dimensional_columns.len(),
        missing_cells: dataset
            .records
            .iter()
            .map(|r| r.dimensional.iter().filter(|v| v.is_none()).count())
            .sum(),
        fills,
    });
    Ok(ExitCode::SUCCESS)
}

fn serve(store_dir: &Path, bind: &str, model: Option<&Path>, cfg: &RunConfig) -> CmdResult {
    let store = Arc::new(SharedStore::open(store_dir, Arc::new(SystemClock))?);
    let mut state = AppState::new(Arc::clone(&store));
    state.pipeline = cfg.pipeline.clone();
    if let Some(p) = model {
        state = state.with_model(load_model(p)?.0);
    }
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(bind)
            .await
            .map_err(|e| Failure::Io(format!("bind {bind}: {e}")))?;
        let addr = listener.local_addr().map_err(|e| Failure::Io(e.to_string()))?;
        eprintln!("listening on http://{addr}");
        boltwin_service::serve(listener, state, shutdown_signal())
            .await
            .map_err(|e| Failure::Io(e.to_string()))
    })?;
    eprintln!("store flushed to {}", store_dir.display());
    Ok(ExitCode::SUCCESS)
}

async fn shutdown_signal() {
    let ctrl_c = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let term = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        () = ctrl_c => {},
        () = term => {},
    }
}

fn predict(
    model_path: &Path,
    properties: Option<&Path>,
    store: Option<&Path>,
    twin: Option<&str>,
    cfg: &RunConfig,
) -> CmdResult {
    let (model, _) = load_model(model_path)?;
    let props: PropertyMap = match (properties, store, twin) {
        (Some(p), _, _) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", p.display())))?;
            let obj = value
                .as_object()
                .ok_or_else(|| Failure::Invalid("properties file must hold a JSON object".into()))?;
            obj.iter()
                .filter_map(|(k, v)| Scalar::from_json(v).map(|s| (k.clone(), s)))
                .collect()
        }
        (None, Some(dir), Some(id)) => {
            if !dir.join(boltwin_core::twin::EVENT_LOG_FILE).exists() {
                return Err(Failure::Io(format!("no twin store at {}", dir.display())));
            }
            SharedStore::open(dir, Arc::new(SystemClock))?.get_twin(id)?.properties
        }
        _ => return Err(Failure::Io("predict needs --properties or --store with --twin".into())),
    };
    let prediction = predict_twin(&model, &props, &cfg.pipeline).map_err(|e: PredictError| Failure::Invalid(e.to_string()))?;
    print_json(&prediction);
    Ok(ExitCode::SUCCESS)
}
