//! Administrative HTTP API under `/admin/v1`, guarded by a bearer token.

use std::collections::BTreeMap;

use axum::body::Body;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::Next;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use relaylab_core::{
    ConversationId, Error, ExperimentConfig, ExperimentId, ExportOptions, ParticipantId, Platform, TransformSpec,
};
use serde::{Deserialize, Serialize};

use crate::AppState;

pub fn routes(state: AppState) -> Router<AppState> {
    Router::new()
        .route("/experiments", post(create_experiment).get(list_experiments))
        .route("/experiments/{id}", get(get_experiment))
        .route(
            "/experiments/{id}/participants",
            post(register_participant).get(list_participants),
        )
        .route("/experiments/{id}/schedule", post(generate_schedule).get(get_schedule))
        .route("/experiments/{id}/rounds/{round}/start", post(start_round))
        .route("/experiments/{id}/rounds/{round}/close", post(close_round))
        .route("/experiments/{id}/conversations", get(list_conversations))
        .route("/experiments/{id}/export", get(export))
        .route("/experiments/{id}/integrity", get(integrity))
        .route("/conversations/{id}/condition", post(assign_condition))
        .route("/conversations/{id}/close", post(close_conversation))
        .route("/conversations/{id}/messages", get(list_messages))
        .layer(axum::middleware::from_fn_with_state(state, require_admin))
}

async fn require_admin(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let presented = request
        .headers()
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "));
    match presented {
        Some(token) if constant_time_eq(token.as_bytes(), state.admin_token.as_bytes()) => next.run(request).await,
        _ => ApiError(Error::Auth).into_response(),
    }
}

fn constant_time_eq(a: &[u8], b: &[u8]) -> bool {
    a.len() == b.len() && a.iter().zip(b).fold(0u8, |acc, (x, y)| acc | (x ^ y)) == 0
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

pub struct ApiError(pub Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

pub fn status_of(error: &Error) -> StatusCode {
    match error.code() {
        "VALIDATION" => StatusCode::BAD_REQUEST,
        "AUTH" => StatusCode::UNAUTHORIZED,
        "FORBIDDEN" => StatusCode::FORBIDDEN,
        "NOT_FOUND" => StatusCode::NOT_FOUND,
        "DUPLICATE" | "STATE" | "CLOSED" => StatusCode::CONFLICT,
        "SIZE" => StatusCode::PAYLOAD_TOO_LARGE,
        "INFEASIBLE" => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.0.code().to_owned(),
            message: self.0.to_string(),
        };
        (status_of(&self.0), Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn run<T: Send + 'static>(
    state: &AppState,
    f: impl FnOnce(&Platform) -> relaylab_core::Result<T> + Send + 'static,
) -> ApiResult<T> {
    let platform = state.platform.clone();
    tokio::task::spawn_blocking(move || f(&platform))
        .await
        .unwrap_or_else(|e| Err(Error::Io(std::io::Error::other(e))))
        .map_err(ApiError)
}

async fn create_experiment(
    State(state): State<AppState>,
    Json(config): Json<ExperimentConfig>,
) -> ApiResult<impl IntoResponse> {
    let experiment = run(&state, move |p| p.create_experiment(config)).await?;
    Ok((StatusCode::CREATED, Json(experiment)))
}

async fn list_experiments(State(state): State<AppState>) -> ApiResult<impl IntoResponse> {
    Ok(Json(run(&state, |p| p.experiments()).await?))
}

async fn get_experiment(State(state): State<AppState>, Path(id): Path<ExperimentId>) -> ApiResult<impl IntoResponse> {
    Ok(Json(run(&state, move |p| p.experiment(&id)).await?))
}

#[derive(Debug, Deserialize)]
struct NewParticipant {
    display_name: String,
}

async fn register_participant(
    State(state): State<AppState>,
    Path(id): Path<ExperimentId>,
    Json(body): Json<NewParticipant>,
) -> ApiResult<impl IntoResponse> {
    let registration = run(&state, move |p| p.register_participant(&id, &body.display_name)).await?;
    Ok((StatusCode::CREATED, Json(registration)))
}

async fn list_participants(
    State(state): State<AppState>,
    Path(id): Path<ExperimentId>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(run(&state, move |p| p.participants(&id)).await?))
}

async fn generate_schedule(
    State(state): State<AppState>,
    Path(id): Path<ExperimentId>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(run(&state, move |p| p.generate_schedule(&id)).await?))
}

async fn get_schedule(State(state): State<AppState>, Path(id): Path<ExperimentId>) -> ApiResult<impl IntoResponse> {
    let schedule = run(&state, move |p| p.schedule(&id)).await?;
    schedule
        .map(Json)
        .ok_or_else(|| ApiError(Error::NotFound { entity: "schedule", key: "experiment has none".into() }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct RoundResult {
    pub round: usize,
    pub conversation_ids: Vec<ConversationId>,
}

async fn start_round(
    State(state): State<AppState>,
    Path((id, round)): Path<(ExperimentId, usize)>,
) -> ApiResult<impl IntoResponse> {
    let conversation_ids = run(&state, move |p| p.start_round(&id, round)).await?;
    Ok(Json(RoundResult { round, conversation_ids }))
}

async fn close_round(
    State(state): State<AppState>,
    Path((id, round)): Path<(ExperimentId, usize)>,
) -> ApiResult<impl IntoResponse> {
    let conversation_ids = run(&state, move |p| p.close_round(&id, round)).await?;
    Ok(Json(RoundResult { round, conversation_ids }))
}

async fn list_conversations(
    State(state): State<AppState>,
    Path(id): Path<ExperimentId>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(run(&state, move |p| p.conversations(&id)).await?))
}

#[derive(Debug, Default, Deserialize)]
struct ExportQuery {
    #[serde(default)]
    redact: bool,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<ExperimentId>,
    Query(query): Query<ExportQuery>,
) -> ApiResult<Response> {
    let options = ExportOptions {
        redact_names: query.redact,
    };
    let bytes = run(&state, move |p| {
        let mut out = Vec::new();
        p.export_transcripts(&id, &mut out, options)?;
        Ok(out)
    })
    .await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], Body::from(bytes)).into_response())
}

async fn integrity(State(state): State<AppState>, Path(id): Path<ExperimentId>) -> ApiResult<impl IntoResponse> {
    Ok(Json(run(&state, move |p| p.verify_integrity(&id)).await?))
}

#[derive(Debug, Deserialize)]
struct ConditionBody {
    per_recipient: BTreeMap<ParticipantId, TransformSpec>,
}

async fn assign_condition(
    State(state): State<AppState>,
    Path(id): Path<ConversationId>,
    Json(body): Json<ConditionBody>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(run(&state, move |p| p.assign_condition(&id, body.per_recipient)).await?))
}

async fn close_conversation(
    State(state): State<AppState>,
    Path(id): Path<ConversationId>,
) -> ApiResult<impl IntoResponse> {
    Ok(Json(run(&state, move |p| p.close_conversation(&id)).await?))
}

/// A canonical message with every recipient's delivered variant.
#[derive(Debug, Serialize)]
struct MessageWithDeliveries {
    #[serde(flatten)]
    message: relaylab_core::MessageEvent,
    deliveries: Vec<relaylab_core::DeliveredVariant>,
}

async fn list_messages(
    State(state): State<AppState>,
    Path(id): Path<ConversationId>,
) -> ApiResult<impl IntoResponse> {
    let messages = run(&state, move |p| {
        p.messages(&id)?
            .into_iter()
            .map(|message| {
                let deliveries = p.deliveries(&message.id)?;
                Ok(MessageWithDeliveries { message, deliveries })
            })
            .collect::<relaylab_core::Result<Vec<_>>>()
    })
    .await?;
    Ok(Json(messages))
}
