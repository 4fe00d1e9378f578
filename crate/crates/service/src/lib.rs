//! HTTP/JSON wire contract over a [`SharedStore`].
//!
//! | method | path                         | success |
//! |--------|------------------------------|---------|
//! | PUT    | `/models/{model_id}`         | 201     |
//! | PUT    | `/twins/{twin_id}`           | 201     |
//! | PATCH  | `/twins/{twin_id}/properties`| 200     |
//! | GET    | `/twins/{twin_id}`           | 200     |
//! | GET    | `/twins/{twin_id}/history`   | 200     |
//! | POST   | `/twins/{twin_id}/predict`   | 200     |
//!
//! Every error body is `{"error_code": ..., "message": ...}`.

use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, patch, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use boltwin_core::ml::Model;
use boltwin_core::pipeline::PipelineConfig;
use boltwin_core::predict::{predict_twin, PredictError};
use boltwin_core::twin::{parse_model, ModelError, PropertyMap, Scalar, SharedStore, StoreError};

/// Shared handler state.
#[derive(Clone)]
pub struct AppState {
    pub store: Arc<SharedStore>,
    /// Classifier used by the predict endpoint, if one was loaded.
    pub model: Option<Arc<Model>>,
    /// Supplies area and gauge length when a model wants stress or strain.
    pub pipeline: PipelineConfig,
}

impl AppState {
    pub fn new(store: Arc<SharedStore>) -> Self {
        Self {
            store,
            model: None,
            pipeline: PipelineConfig::default(),
        }
    }

    pub fn with_model(mut self, model: Model) -> Self {
        self.model = Some(Arc::new(model));
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error_code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            status,
            body: ErrorBody {
                error_code: code.to_owned(),
                message: message.into(),
            },
        }
    }

    pub fn status(&self) -> StatusCode {
        self.status
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

fn model_error_code(e: &ModelError) -> &'static str {
    match e {
        ModelError::MalformedJson(_) => "malformed_json",
        ModelError::InvalidDocument(_) => "invalid_document",
        ModelError::UnsupportedSchema { .. } => "unsupported_schema",
        ModelError::UnsupportedContent(_) => "unsupported_content",
        ModelError::DuplicateProperty(_) => "duplicate_property",
        ModelError::EmptyModel => "empty_model",
        ModelError::KindMismatch { .. } => "kind_mismatch",
        ModelError::NonFiniteFloat(_) => "non_finite_float",
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let (status, code) = match &e {
            StoreError::UnknownModel(_) => (StatusCode::NOT_FOUND, "unknown_model"),
            StoreError::UnknownTwin(_) => (StatusCode::NOT_FOUND, "unknown_twin"),
            StoreError::DuplicateTwin(_) => (StatusCode::CONFLICT, "duplicate_twin"),
            StoreError::ModelInUse(_) => (StatusCode::CONFLICT, "model_in_use"),
            StoreError::UnknownProperty { .. } => (StatusCode::BAD_REQUEST, "unknown_property"),
            StoreError::Validation(m) => (StatusCode::BAD_REQUEST, model_error_code(m)),
            StoreError::CorruptLog { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "corrupt_log"),
            StoreError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io_error"),
        };
        if status.is_server_error() {
            log::error!("{e}");
        }
        ApiError::new(status, code, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_json(body: &[u8]) -> ApiResult<Value> {
    serde_json::from_slice(body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))
}

fn property_map(value: &Value) -> ApiResult<PropertyMap> {
    let bad = |m: String| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", m);
    let obj = value
        .as_object()
        .ok_or_else(|| bad("properties must be a JSON object".into()))?;
    obj.iter()
        .map(|(k, v)| {
            Scalar::from_json(v)
                .map(|s| (k.clone(), s))
                .ok_or_else(|| bad(format!("property `{k}` must be a boolean, number or string")))
        })
        .collect()
}

/// Build the router. Handlers run store calls inline; every store
/// operation is short and the writer lock is never held across an await.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models/{model_id}", put(put_model))
        .route("/twins/{twin_id}", put(put_twin).get(get_twin))
        .route("/twins/{twin_id}/properties", patch(patch_twin))
        .route("/twins/{twin_id}/history", get(get_history))
        .route("/twins/{twin_id}/predict", post(predict))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
        })
        .with_state(state)
}

async fn put_model(
    State(state): State<AppState>,
    Path(model_id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let text = std::str::from_utf8(&body)
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_json", e.to_string()))?;
    let model = parse_model(text).map_err(|e| {
        ApiError::new(StatusCode::BAD_REQUEST, model_error_code(&e), e.to_string())
    })?;
    if model.model_id != model_id {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "id_mismatch",
            format!("document @id `{}` does not match path `{model_id}`", model.model_id),
        ));
    }
    state.store.register_model(model.clone())?;
    Ok((StatusCode::CREATED, Json(model)))
}

async fn put_twin(
    State(state): State<AppState>,
    Path(twin_id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let value = parse_json(&body)?;
    let model_id = value
        .get("model_id")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "invalid_body", "missing string model_id"))?;
    let empty = Value::Object(Map::new());
    let initial = property_map(value.get("properties").unwrap_or(&empty))?;
    let twin = state.store.create_twin(&twin_id, model_id, initial)?;
    Ok((StatusCode::CREATED, Json(twin)))
}

async fn patch_twin(
    State(state): State<AppState>,
    Path(twin_id): Path<String>,
    body: Bytes,
) -> ApiResult<impl IntoResponse> {
    let changes = property_map(&parse_json(&body)?)?;
    Ok(Json(state.store.patch_properties(&twin_id, changes)?))
}

async fn get_twin(
    State(state): State<AppState>,
    Path(twin_id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(state.store.get_twin(&twin_id)?))
}

async fn get_history(
    State(state): State<AppState>,
    Path(twin_id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(state.store.history(&twin_id)?))
}

async fn predict(
    State(state): State<AppState>,
    Path(twin_id): Path<String>,
) -> ApiResult<impl IntoResponse> {
    let twin = state.store.get_twin(&twin_id)?;
    let model = state.model.as_ref().ok_or_else(|| {
        ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "no_model", "server started without a model")
    })?;
    let prediction = predict_twin(model, &twin.properties, &state.pipeline).map_err(|e| match e {
        PredictError::MissingFeature(_) => {
            ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "missing_feature", e.to_string())
        }
        PredictError::Model(_) => {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "model_error", e.to_string())
        }
    })?;
    Ok(Json(prediction))
}

/// Serve until `shutdown` resolves, then flush the store.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let store = Arc::clone(&state.store);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await?;
    store.flush().map_err(|e| match e {
        StoreError::Io(io) => io,
        other => std::io::Error::other(other.to_string()),
    })
}
