use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use boltwin_core::ml::{Forest, Model, TrainConfig};
use boltwin_core::pipeline::PipelineConfig;
use boltwin_core::twin::{SharedStore, SteppingClock, SNAPSHOT_FILE};
use boltwin_core::workflow::{prepare, to_samples};
use boltwin_service::{router, serve, AppState, ErrorBody};

const MODEL_DOC: &str = include_str!("../../core/data/bolt.twin.json");
const FIXTURE: &str = include_str!("../../core/data/bolt_tests.csv");

fn state() -> AppState {
    AppState::new(Arc::new(SharedStore::in_memory(Arc::new(SteppingClock::default()))))
}

async fn call(app: &axum::Router, method: Method, uri: &str, body: impl Into<Body>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.into())
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn with_bolt_3(app: &axum::Router) {
    let (s, _) = call(app, Method::PUT, "/models/AcmeBolt", MODEL_DOC).await;
    assert_eq!(s, StatusCode::CREATED);
    let body = json!({"model_id": "AcmeBolt", "properties": {"Overall_Length": 4.001, "Fracture": false}});
    let (s, v) = call(app, Method::PUT, "/twins/Bolt_3", body.to_string()).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    assert_eq!(v["version"], 1);
}

fn error_code(v: &Value) -> String {
    serde_json::from_value::<ErrorBody>(v.clone()).unwrap().error_code
}

#[tokio::test]
async fn twin_lifecycle_round_trips() {
    let app = router(state());
    with_bolt_3(&app).await;

    let (s, v) = call(&app, Method::PATCH, "/twins/Bolt_3/properties", r#"{"Max_Position": 0.052, "Max_Load": 118.0}"#).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["version"], 2);

    let (s, v) = call(&app, Method::PATCH, "/twins/Bolt_3/properties", "{}").await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["version"], 2);

    let (s, v) = call(&app, Method::GET, "/twins/Bolt_3", Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["properties"]["Max_Position"], json!(0.052));
    assert_eq!(v["properties"]["Overall_Length"], json!(4.001));
    assert_eq!(v["model_id"], "AcmeBolt");

    let (s, v) = call(&app, Method::GET, "/twins/Bolt_3/history", Body::empty()).await;
    assert_eq!(s, StatusCode::OK);
    let versions: Vec<u64> = v.as_array().unwrap().iter().map(|e| e["version"].as_u64().unwrap()).collect();
    assert_eq!(versions, [1, 2]);
}

#[tokio::test]
async fn error_statuses_and_codes() {
    let app = router(state());
    with_bolt_3(&app).await;

    let dup = json!({"model_id": "AcmeBolt", "properties": {}}).to_string();
    let (s, v) = call(&app, Method::PUT, "/twins/Bolt_3", dup).await;
    assert_eq!((s, error_code(&v)), (StatusCode::CONFLICT, "duplicate_twin".into()));

    let other = json!({"model_id": "Nope", "properties": {}}).to_string();
    let (s, v) = call(&app, Method::PUT, "/twins/Bolt_9", other).await;
    assert_eq!((s, error_code(&v)), (StatusCode::NOT_FOUND, "unknown_model".into()));

    let (s, v) = call(&app, Method::PATCH, "/twins/Bolt_99/properties", r#"{"Max_Load": 1.0}"#).await;
    assert_eq!((s, error_code(&v)), (StatusCode::NOT_FOUND, "unknown_twin".into()));

    let (s, v) = call(&app, Method::PATCH, "/twins/Bolt_3/properties", r#"{"Fracture": 3.2}"#).await;
    assert_eq!((s, error_code(&v)), (StatusCode::BAD_REQUEST, "kind_mismatch".into()));

    let (s, v) = call(&app, Method::PATCH, "/twins/Bolt_3/properties", r#"{"Max_Load": 1.0, "Colour": "red"}"#).await;
    assert_eq!((s, error_code(&v)), (StatusCode::BAD_REQUEST, "unknown_property".into()));
    // Rejected batches leave the twin untouched.
    let (_, v) = call(&app, Method::GET, "/twins/Bolt_3", Body::empty()).await;
    assert_eq!(v["version"], 1);
    assert!(v["properties"].get("Max_Load").is_none());

    let (s, v) = call(&app, Method::PATCH, "/twins/Bolt_3/properties", "{not json").await;
    assert_eq!((s, error_code(&v)), (StatusCode::BAD_REQUEST, "malformed_json".into()));

    let (s, v) = call(&app, Method::PATCH, "/twins/Bolt_3/properties", r#"{"Max_Load": [1]}"#).await;
    assert_eq!((s, error_code(&v)), (StatusCode::BAD_REQUEST, "invalid_body".into()));

    let (s, v) = call(&app, Method::PUT, "/models/Other", MODEL_DOC).await;
    assert_eq!((s, error_code(&v)), (StatusCode::BAD_REQUEST, "id_mismatch".into()));

    let doc = r#"{"@id": "X", "contents": [{"@type": "Property", "name": "a", "schema": "dateTime"}]}"#;
    let (s, v) = call(&app, Method::PUT, "/models/X", doc).await;
    assert_eq!((s, error_code(&v)), (StatusCode::BAD_REQUEST, "unsupported_schema".into()));

    let (s, v) = call(&app, Method::GET, "/twins/Bolt_99/history", Body::empty()).await;
    assert_eq!((s, error_code(&v)), (StatusCode::NOT_FOUND, "unknown_twin".into()));

    let (s, v) = call(&app, Method::GET, "/nowhere", Body::empty()).await;

    assert_eq!((s, error_code(&v)), (StatusCode::NOT_FOUND, "not_found".into()));

    let (s, v) = call(&app, Method::POST, "/twins/Bolt_3/predict", Body::empty()).await;
    assert_eq!((s, error_code(&v)), (StatusCode::SERVICE_UNAVAILABLE, "no_model".into()));
}

fn fixture_forest(n_trees: usize) -> Model {
    let prepared = prepare(FIXTURE, &PipelineConfig::default()).unwrap();
    let samples = to_samples(&prepared.cleaned).unwrap();
    Model::RandomForest(Forest::train(&samples, &TrainConfig { n_trees, ..Default::default() }).unwrap())
}

#[tokio::test]
async fn predict_with_forest() {
    let n_trees = 25;
    let app = router(state().with_model(fixture_forest(n_trees)));
    with_bolt_3(&app).await;

    // Model features are missing until the twin carries test results.
    let (s, v) = call(&app, Method::POST, "/twins/Bolt_3/predict", Body::empty()).await;
    assert_eq!((s, error_code(&v)), (StatusCode::UNPROCESSABLE_ENTITY, "missing_feature".into()));

    // Feed the twin the Bolt_3 test-1 row of the fixture.
    let mut lines = FIXTURE.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.find(|l| l.starts_with("Bolt_3,1,")).unwrap().split(',').collect();
    let mut props = serde_json::Map::new();
    for (h, cell) in header.iter().zip(&row).skip(5) {
        props.insert((*h).to_owned(), json!(cell.parse::<f64>().unwrap()));
    }
    props.insert("Max_Load".into(), json!(row[2].parse::<f64>().unwrap()));
    props.insert("Max_Position".into(), json!(row[3].parse::<f64>().unwrap()));
    let (s, _) = call(&app, Method::PATCH, "/twins/Bolt_3/properties", Value::Object(props).to_string()).await;
    assert_eq!(s, StatusCode::OK);

    let (s, v) = call(&app, Method::POST, "/twins/Bolt_3/predict", Body::empty()).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["model"], "forest");
    assert_eq!(v["predicted_label"], "no_fracture");
    let p = v["fracture_probability"].as_f64().unwrap();
    assert!(p < 0.5);
    let votes = p * n_trees as f64;
    assert!((votes - votes.round()).abs() < 1e-9, "vote fraction {p}");
}

#[tokio::test]
async fn serve_flushes_on_shutdown() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_owned();
    let store = Arc::new(SharedStore::open(&dir, Arc::new(SteppingClock::default())).unwrap());
    store.register_model(boltwin_core::twin::parse_model(MODEL_DOC).unwrap()).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let (tx, rx) = tokio::sync::oneshot::channel::<()>();
    let task = tokio::spawn(serve(listener, AppState::new(store), async {
        let _ = rx.await;
    }));
    tx.send(()).unwrap();
    task.await.unwrap().unwrap();
    let snapshot: Value = serde_json::from_str(&std::fs::read_to_string(dir.join(SNAPSHOT_FILE)).unwrap()).unwrap();
    assert!(snapshot.to_string().contains("AcmeBolt"));
    let reopened = SharedStore::open(&dir, Arc::new(SteppingClock::default())).unwrap();
    assert!(reopened.read(|s| s.model("AcmeBolt").is_some()));
}
