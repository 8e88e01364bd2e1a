//! HTTP/JSON service: queries, feedback, roster listing and hot reload.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;
use tracing::info;

use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::feedback::{FeedbackInput, FeedbackStore};
use crate::roster::{QueryError, Roster};

pub struct AppState {
    config: PipelineConfig,
    roster: RwLock<Arc<Roster>>,
    versions: AtomicU64,
    feedback: FeedbackStore,
}

impl AppState {
    pub fn new(config: PipelineConfig) -> Result<Self, CliError> {
        let roster = Roster::load(&config, 1)?;
        let feedback = FeedbackStore::open(&config.paths.feedback)?;
        Ok(Self {
            config,
            roster: RwLock::new(Arc::new(roster)),
            versions: AtomicU64::new(1),
            feedback,
        })
    }

    /// The current snapshot; a request holds it for its whole lifetime.
    pub fn roster(&self) -> Arc<Roster> {
        self.roster.read().expect("roster lock poisoned").clone()
    }

    /// Loads a fresh roster off to the side, then swaps it in whole.
    pub fn reload(&self) -> Result<u64, CliError> {
        let version = self.versions.fetch_add(1, Ordering::SeqCst) + 1;
        let fresh = Arc::new(Roster::load(&self.config, version)?);
        *self.roster.write().expect("roster lock poisoned") = fresh;
        Ok(version)
    }

    pub fn feedback(&self) -> &FeedbackStore {
        &self.feedback
    }
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: String,
}

fn error(status: StatusCode, msg: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: msg.into() })).into_response()
}

/// Any body that is not the expected JSON is a 400.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, String> {
    serde_json::from_slice(body).map_err(|e| format!("malformed body: {e}"))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    text: String,
    k: i64,
    #[serde(default)]
    model_tag: Option<String>,
}

async fn query(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let req: QueryBody = match parse(&body) {
        Ok(r) => r,
        Err(msg) => return error(StatusCode::BAD_REQUEST, msg),
    };
    if req.k < 1 {
        return error(StatusCode::BAD_REQUEST, "k must be at least 1");
    }
    let roster = state.roster();
    match roster.query(&req.text, req.k as usize, req.model_tag.as_deref()) {
        Ok(resp) => Json(resp).into_response(),
        Err(e @ QueryError::BadRequest(_)) => error(StatusCode::BAD_REQUEST, e.to_string()),
        Err(e @ QueryError::UnknownModel(_)) => error(StatusCode::NOT_FOUND, e.to_string()),
        Err(e @ QueryError::Internal(_)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn feedback(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let input: FeedbackInput = match parse(&body) {
        Ok(r) => r,
        Err(msg) => return error(StatusCode::BAD_REQUEST, msg),
    };
    if !(1..=5).contains(&input.rating) {
        return error(
            StatusCode::BAD_REQUEST,
            format!("rating must be in 1..=5, got {}", input.rating),
        );
    }
    if input.k < 1 {
        return error(StatusCode::BAD_REQUEST, "k must be at least 1");
    }
    if !state.roster().has_model(&input.model_tag) {
        return error(
            StatusCode::NOT_FOUND,
            format!("unknown model tag {:?}", input.model_tag),
        );
    }
    let st = state.clone();
    match tokio::task::spawn_blocking(move || st.feedback().append(input)).await {
        Ok(Ok(rec)) => (StatusCode::CREATED, Json(rec)).into_response(),
        Ok(Err(CliError::Usage(m))) => error(StatusCode::BAD_REQUEST, m),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn models(State(state): State<Arc<AppState>>) -> Response {
    Json(state.roster().models()).into_response()
}

#[derive(Debug, Deserialize)]
struct SummaryParams {
    model_tag: Option<String>,
}

async fn summary(State(state): State<Arc<AppState>>, Query(params): Query<SummaryParams>) -> Response {
    Json(state.feedback().summary(params.model_tag.as_deref())).into_response()
}

#[derive(Debug, Serialize)]
struct ReloadBody {
    version: u64,
    models: usize,
}

async fn reload(State(state): State<Arc<AppState>>) -> Response {
    let st = state.clone();
    match tokio::task::spawn_blocking(move || st.reload()).await {
        Ok(Ok(version)) => Json(ReloadBody {
            version,
            models: state.roster().models().len(),
        })
        .into_response(),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    let api = Router::new()
        .route("/api/query", post(query))
        .route("/api/feedback", post(feedback))
        .route("/api/feedback/summary", get(summary))
        .route("/api/models", get(models))
        .route("/api/admin/reload", post(reload));
    let app = match &state.config.serve.console_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.with_state(state)
}

pub async fn serve(config: PipelineConfig, port: Option<u16>) -> Result<(), CliError> {
    let host = config.serve.host.clone();
    let port = port.unwrap_or(config.serve.port);
    let state = Arc::new(AppState::new(config)?);
    let addr: SocketAddr = format!("{host}:{port}")
        .parse()
        .map_err(|e| CliError::usage(format!("bad listen address {host}:{port}: {e}")))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| CliError::runtime(format!("cannot bind {addr}: {e}")))?;
    info!(
        catalog = state.roster().catalog_len(),
        models = state.roster().models().len(),
        "listening on http://{addr}"
    );
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::runtime(e.to_string()))
}
