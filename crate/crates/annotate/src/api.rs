use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::session::DecisionRequest;
use crate::store::{CreateSession, SessionStore};
use crate::AnnotateError;

struct ApiError(AnnotateError);

impl From<AnnotateError> for ApiError {
    fn from(e: AnnotateError) -> Self {
        ApiError(e)
    }
}

pub fn status_of(e: &AnnotateError) -> StatusCode {
    match e {
        AnnotateError::UnknownSession(_) | AnnotateError::UnknownPair { .. } => StatusCode::NOT_FOUND,
        AnnotateError::SessionFinalized(_)
        | AnnotateError::NotFinalized(_)
        | AnnotateError::ConflictingOverride(_)
        | AnnotateError::StaleSequence { .. } => StatusCode::CONFLICT,
        AnnotateError::InvalidOverride(_) | AnnotateError::ManifestInvalid { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        AnnotateError::BadRequest(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({
            "error": self.0.code(),
            "message": self.0.to_string(),
        });
        match &self.0 {
            AnnotateError::ManifestInvalid { issues, .. } => body["issues"] = json!(issues),
            AnnotateError::StaleSequence { sequence, last } => {
                body["sequence"] = json!(sequence);
                body["last_sequence"] = json!(last);
            }
            _ => {}
        }
        (status_of(&self.0), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(AnnotateError::BadRequest(e.to_string())))
}

async fn blocking<T, F>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, AnnotateError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(AnnotateError::BadRequest(format!("worker failed: {e}"))))?
        .map_err(ApiError)
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn create_session(State(store): State<Arc<SessionStore>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let view = blocking(move || store.create(&req)).await?;
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

async fn get_session(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> ApiResult<crate::SessionView> {
    Ok(Json(store.view(&id)?))
}

async fn get_pair(
    State(store): State<Arc<SessionStore>>,
    Path((id, pair_id)): Path<(String, String)>,
) -> ApiResult<crate::PairPayload> {
    Ok(Json(store.pair(&id, &pair_id)?))
}

async fn post_decision(
    State(store): State<Arc<SessionStore>>,
    Path((id, pair_id)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<crate::DecisionResponse> {
    let req: DecisionRequest = parse_body(&body)?;
    Ok(Json(blocking(move || store.post_decision(&id, &pair_id, req)).await?))
}

async fn finalize(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> ApiResult<crate::FinalizeResponse> {
    Ok(Json(blocking(move || store.finalize(&id)).await?))
}

async fn export(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
) -> ApiResult<crate::ExportDocument> {
    Ok(Json(store.export(&id)?))
}

pub fn router(store: Arc<SessionStore>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/pairs/{pair_id}", get(get_pair))
        .route("/sessions/{id}/pairs/{pair_id}/decisions", post(post_decision))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/sessions/{id}/export", get(export))
        .with_state(store)
}

/// Serves the API until Ctrl-C.
pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
