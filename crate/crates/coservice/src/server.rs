//! Local HTTP service for the level editor.
//!
//! Suggest and explain are pure functions of the request and the loaded
//! artifacts. Live sessions are kept in memory behind one mutex, so appends
//! are serialized; with a record path every change rewrites that session log.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use log::{info, warn};
use mrin_core::attribution::SliceNorm;
use mrin_core::neuralnet::ConvLayer;
use mrin_core::sessionlog::{save_sessions, Session, SessionRecord, TurnRecord};
use mrin_core::tilegrid::{Legend, TileGrid};
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::artifacts::Artifacts;
use crate::suggest::{suggest, suggestion_id, SuggestConfig};
use crate::wire::*;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub suggest: SuggestConfig,
    pub layer: ConvLayer,
    pub norm: SliceNorm,
    /// Session log rewritten after every session change.
    pub record_path: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            suggest: SuggestConfig::default(),
            layer: ConvLayer::Conv1,
            norm: SliceNorm::L1,
            record_path: None,
        }
    }
}

pub struct AppState {
    artifacts: Artifacts,
    config: ServiceConfig,
    live: Mutex<Vec<Session>>,
}

impl AppState {
    pub fn new(artifacts: Artifacts, config: ServiceConfig) -> Arc<Self> {
        Arc::new(Self {
            artifacts,
            config,
            live: Mutex::new(Vec::new()),
        })
    }

    /// Live sessions in creation order.
    pub fn live_sessions(&self) -> Vec<Session> {
        self.live.lock().expect("session store poisoned").clone()
    }
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    InvalidLevel(String),
    #[error("{0}")]
    ShapeMismatch(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    InvalidTurn(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) | ApiError::InvalidLevel(_) => StatusCode::BAD_REQUEST,
            ApiError::ShapeMismatch(_) | ApiError::InvalidTurn(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict(_) => StatusCode::CONFLICT,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::BadRequest(_) => "bad_request",
            ApiError::InvalidLevel(_) => "invalid_level",
            ApiError::ShapeMismatch(_) => "shape_mismatch",
            ApiError::NotFound(_) => "not_found",
            ApiError::Conflict(_) => "conflict",
            ApiError::InvalidTurn(_) => "invalid_turn",
            ApiError::Internal(_) => "internal",
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            schema: ERROR_SCHEMA.to_string(),
            version: WIRE_VERSION,
            code: self.code().to_string(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::BadRequest(e.to_string()))
}

fn check_schema(found: &Option<String>, expected: &str) -> Result<(), ApiError> {
    match found {
        Some(s) if s != expected => Err(ApiError::BadRequest(format!(
            "expected schema {expected}, got {s}"
        ))),
        _ => Ok(()),
    }
}

fn parse_grid(rows: &[String]) -> Result<TileGrid, ApiError> {
    TileGrid::from_rows(rows, Legend::standard()).map_err(|e| ApiError::InvalidLevel(e.to_string()))
}

fn model_level(state: &AppState, body: &Bytes) -> Result<TileGrid, ApiError> {
    let req: LevelRequest = parse(body)?;
    check_schema(&req.schema, LEVEL_SCHEMA)?;
    let grid = parse_grid(&req.level)?;
    let (w, h) = state.artifacts.dims();
    if grid.dims() != (w, h) {
        return Err(ApiError::ShapeMismatch(format!(
            "level is {}x{}, the model expects {w}x{h}",
            grid.width(),
            grid.height()
        )));
    }
    Ok(grid)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<HealthResponse> {
    let (width, height) = state.artifacts.dims();
    Json(HealthResponse {
        schema: HEALTH_SCHEMA.to_string(),
        version: WIRE_VERSION,
        status: "ok".to_string(),
        fingerprint: state.artifacts.fingerprint().to_string(),
        width,
        height,
        training_instances: state.artifacts.model.meta.instances,
        training_sessions: state.artifacts.sessions.len(),
    })
}

pub fn suggestion_response(
    state: &AppState,
    grid: &TileGrid,
) -> Result<SuggestionResponse, ApiError> {
    let picks = suggest(&state.artifacts.model.params, grid, &state.config.suggest)
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    let legend = Legend::standard();
    Ok(SuggestionResponse {
        schema: SUGGESTION_SCHEMA.to_string(),
        version: WIRE_VERSION,
        suggestion_id: suggestion_id(state.artifacts.fingerprint(), grid, &picks),
        additions: picks
            .iter()
            .map(|s| SuggestionItem {
                x: s.x,
                y: s.y,
                tile: legend.glyph(s.tile).to_string(),
                q_value: s.q_value,
            })
            .collect(),
    })
}

pub fn explanation_response(
    state: &AppState,
    grid: &TileGrid,
) -> Result<ExplanationResponse, ApiError> {
    let explainer = state
        .artifacts
        .explainer()
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .with_layer(state.config.layer)
        .with_norm(state.config.norm);
    let e = explainer
        .explain(grid)
        .map_err(|e| ApiError::Internal(e.to_string()))?;
    Ok(ExplanationResponse {
        schema: EXPLANATION_SCHEMA.to_string(),
        version: WIRE_VERSION,
        instance_id: e.instance_id,
        session_id: e.session_id,
        layer: e.layer.number(),
        filter_index: e.filter_index,
        modal_count: e.modal_count,
        responsible_level: e.responsible_level.to_rows(Legend::standard()),
    })
}

async fn post_suggest(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<SuggestionResponse> {
    let grid = model_level(&state, &body)?;
    Ok(Json(suggestion_response(&state, &grid)?))
}

async fn post_explain(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<ExplanationResponse> {
    let grid = model_level(&state, &body)?;
    Ok(Json(explanation_response(&state, &grid)?))
}

fn persist(state: &AppState, sessions: &[Session]) -> Result<(), ApiError> {
    if let Some(path) = &state.config.record_path {
        save_sessions(sessions, path).map_err(|e| {
            warn!("could not record sessions to {}: {e}", path.display());
            ApiError::Internal(format!("recording sessions failed: {e}"))
        })?;
    }
    Ok(())
}

fn session_response(s: &Session) -> SessionResponse {
    SessionResponse::new(SessionRecord::from_session(s))
}

async fn list_sessions(State(state): State<Arc<AppState>>) -> Json<SessionListResponse> {
    let live = state.live.lock().expect("session store poisoned");
    Json(SessionListResponse {
        schema: SESSION_LIST_SCHEMA.to_string(),
        version: WIRE_VERSION,
        sessions: live.iter().map(|s| s.session_id.clone()).collect(),
    })
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionResponse>), ApiError> {
    let req: SessionCreateRequest = parse(&body)?;
    check_schema(&req.schema, SESSION_CREATE_SCHEMA)?;
    let initial = parse_grid(&req.initial)?;
    let mut live = state.live.lock().expect("session store poisoned");
    let id = match req.session_id {
        Some(id) if id.is_empty() => {
            return Err(ApiError::BadRequest("session_id must not be empty".into()))
        }
        Some(id) => id,
        None => {
            let mut n = live.len();
            loop {
                let candidate = format!("live{n:04}");
                if !live.iter().any(|s| s.session_id == candidate) {
                    break candidate;
                }
                n += 1;
            }
        }
    };
    if live.iter().any(|s| s.session_id == id) {
        return Err(ApiError::Conflict(format!("session {id} already exists")));
    }
    let session = Session::from_turns(id, initial, Vec::new())
        .map_err(|e| ApiError::InvalidLevel(e.to_string()))?;
    let resp = session_response(&session);
    live.push(session);
    persist(&state, &live)?;
    info!("created session {}", resp.session_id);
    Ok((StatusCode::CREATED, Json(resp)))
}

async fn get_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<SessionResponse> {
    let live = state.live.lock().expect("session store poisoned");
    live.iter()
        .find(|s| s.session_id == id)
        .map(|s| Json(session_response(s)))
        .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))
}

async fn append_turn(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<SessionResponse> {
    let req: TurnRequest = parse(&body)?;
    check_schema(&req.schema, TURN_SCHEMA)?;
    let record: TurnRecord = req.into_record();
    let turn = record.to_turn().map_err(ApiError::InvalidTurn)?;
    let mut live = state.live.lock().expect("session store poisoned");
    let slot = live
        .iter_mut()
        .find(|s| s.session_id == id)
        .ok_or_else(|| ApiError::NotFound(format!("no session {id}")))?;
    let mut turns = slot.turns.clone();
    turns.push(turn);
    let updated = Session::from_turns(id.clone(), slot.initial.clone(), turns)
        .map_err(|e| ApiError::InvalidTurn(e.to_string()))?;
    *slot = updated;
    let resp = session_response(slot);
    persist(&state, &live)?;
    Ok(Json(resp))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/suggest", post(post_suggest))
        .route("/explain", post(post_explain))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/turns", post(append_turn))
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(state: Arc<AppState>, bind: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
