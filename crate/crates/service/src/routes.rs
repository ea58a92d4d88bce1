use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::cors::{Any, CorsLayer};

use crate::state::{AppState, DeletePayload, ServiceError};

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownCourse(_) | ServiceError::UnknownVideo(_) => StatusCode::NOT_FOUND,
            ServiceError::UnknownSession(_) => StatusCode::UNAUTHORIZED,
            ServiceError::OffBoard { .. } | ServiceError::Duplicate { .. } | ServiceError::Busy(_) => {
                StatusCode::CONFLICT
            }
            ServiceError::NoFeedback(_) => StatusCode::PRECONDITION_FAILED,
            ServiceError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownCourse(_) => "unknown_course",
            ServiceError::UnknownVideo(_) => "unknown_video",
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::OffBoard { .. } => "off_board",
            ServiceError::Duplicate { .. } => "duplicate",
            ServiceError::NoFeedback(_) => "no_feedback",
            ServiceError::Busy(_) => "busy",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Internal(_) => "internal",
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        if matches!(self, ServiceError::Internal(_)) {
            log::error!("{self}");
        }
        let body = ErrorBody {
            error: self.code().to_string(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}

type Shared = State<Arc<AppState>>;

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload.map(|Json(v)| v).map_err(|e| ServiceError::BadRequest(e.body_text()))
}

async fn courses(State(state): Shared) -> impl IntoResponse {
    Json(state.courses())
}

async fn boards(State(state): Shared, Path((course, video)): Path<(String, String)>) -> Result<Response, ServiceError> {
    Ok(Json(state.boards(&course, &video)?).into_response())
}

#[derive(Debug, Deserialize)]
struct SessionBody {
    name: String,
}

async fn create_session(
    State(state): Shared,
    payload: Result<Json<SessionBody>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req = body(payload)?;
    let info = state.create_session(&req.name)?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn delete(
    State(state): Shared,
    payload: Result<Json<DeletePayload>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let req = body(payload)?;
    Ok(Json(state.delete(&req)?).into_response())
}

async fn leaderboard(State(state): Shared, Path(course): Path<String>) -> Result<Response, ServiceError> {
    Ok(Json(state.leaderboard(&course)?).into_response())
}

async fn optimize(State(state): Shared, Path(course): Path<String>) -> Result<Response, ServiceError> {
    // Claim the slot before leaving the request task so a concurrent call sees 409.
    let guard = state.begin_optimize(&course)?;
    let worker = Arc::clone(&state);
    let summary = tokio::task::spawn_blocking(move || worker.optimize(guard))
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(Json(summary).into_response())
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = match &state.config().cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(v),
            Err(_) => {
                log::warn!("invalid CORS origin `{origin}`, allowing any");
                CorsLayer::new().allow_origin(Any)
            }
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);

    Router::new()
        .route("/api/courses", get(courses))
        .route("/api/game/delete", post(delete))
        .route("/api/game/{course}/{video}", get(boards))
        .route("/api/leaderboard/{course}", get(leaderboard))
        .route("/api/admin/optimize/{course}", post(optimize))
        .route("/api/session", post(create_session))
        .layer(cors)
        .with_state(state)
}
