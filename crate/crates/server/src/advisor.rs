//! Advice service: verifies presented attestations and runs the prompt
//! pipeline.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;
use uuid::Uuid;
use zkadvice_core::advisor::{AdviseRequest, AdviseResponse, Advisor, AdvisorError, VerificationStatus};
use zkadvice_core::attestation::ProofDocument;
use zkadvice_core::llm::LlmError;
use zkadvice_core::prompt::PromptError;

use crate::api::{join_error, ApiError};

pub fn router(advisor: Arc<Advisor>) -> Router {
    Router::new()
        .route("/v1/advise", post(advise))
        .route("/v1/verify", post(verify))
        .route("/v1/health", get(health))
        .layer(CorsLayer::permissive())
        .with_state(advisor)
}

fn advisor_error(e: AdvisorError) -> ApiError {
    let kind = e.kind();
    let status = match &e {
        AdvisorError::InvalidRequest(_) => StatusCode::BAD_REQUEST,
        AdvisorError::Prompt(p) => match p {
            PromptError::ProposalParseFailure { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            PromptError::UnknownContext(_) | PromptError::InvalidOptionSet(_) => StatusCode::BAD_REQUEST,
            PromptError::InvalidTemplate(_) => StatusCode::INTERNAL_SERVER_ERROR,
            PromptError::EmptyModelOutput => StatusCode::BAD_GATEWAY,
            PromptError::Llm(LlmError::Timeout(_)) => StatusCode::GATEWAY_TIMEOUT,
            PromptError::Llm(LlmError::InvalidRequest(_)) => StatusCode::BAD_REQUEST,
            PromptError::Llm(_) => StatusCode::BAD_GATEWAY,
        },
    };
    ApiError::new(status, kind, e.to_string())
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("MalformedRequest", e.to_string()))
}

async fn advise(State(advisor): State<Arc<Advisor>>, body: Bytes) -> Result<Json<AdviseResponse>, ApiError> {
    let request_id = Uuid::new_v4();
    let request: AdviseRequest = parse_body(&body)?;
    let worker = advisor.clone();
    let response =
        tokio::task::spawn_blocking(move || worker.advise(&request)).await.map_err(join_error)?.map_err(|e| {
            tracing::info!(%request_id, error = e.kind(), "advice failed");
            advisor_error(e)
        })?;
    let gated = response.verification != VerificationStatus::Valid;
    tracing::info!(
        %request_id,
        verification = ?response.verification,
        c_prop = %response.contexts_used.c_prop,
        c_exp = %response.contexts_used.c_exp,
        d1_claims = response.d1_claims.len(),
        d1_withheld = gated,
        retries = response.proposal.retries_used,
        "advice generated"
    );
    Ok(Json(response))
}

async fn verify(State(advisor): State<Arc<Advisor>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let doc: ProofDocument = parse_body(&body)?;
    let worker = advisor.clone();
    let result = tokio::task::spawn_blocking(move || worker.verify(&doc)).await.map_err(join_error)?;
    let body = match result {
        Ok(journal) => json!({ "verification": "valid", "journal": journal }),
        Err(outcome) => json!({ "verification": outcome.as_str(), "journal": Value::Null }),
    };
    Ok(Json(body))
}

async fn health(State(advisor): State<Arc<Advisor>>) -> Json<Value> {
    Json(json!({
        "status": "ok",
        "backend_id": advisor.backend().id().as_str(),
        "pinned_program_digest": advisor.pinned().digest,
        "pinned_program_version": advisor.pinned().version,
        "provider_id": advisor.provider_id(),
    }))
}
