//! Inference service: turns private answers into an attested category.
//!
//! Answers never leave the request handler. Logs and the issuance record
//! carry only the public journal.

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tower_http::cors::CorsLayer;
use uuid::Uuid;
use zkadvice_core::attestation::{AttestationBackend, AttestationError, ProofDocument};
use zkadvice_core::inference::{parse_profile, QuestionnaireSpec, PROGRAM_VERSION};

use crate::api::{join_error, ApiError};

/// Append-only JSON-lines record of issued journals.
pub struct IssuanceLog {
    file: Mutex<File>,
}

#[derive(Serialize)]
struct IssuanceRecord<'a> {
    request_id: &'a str,
    journal: &'a Value,
    backend_id: &'a str,
    wall_time_ms: u64,
}

impl IssuanceLog {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self { file: Mutex::new(file) })
    }

    fn append(&self, request_id: &str, doc: &ProofDocument, wall_time_ms: u64) -> std::io::Result<()> {
        let record = IssuanceRecord {
            request_id,
            journal: &doc.journal,
            backend_id: doc.proof.backend_id.as_str(),
            wall_time_ms,
        };
        let mut line = serde_json::to_vec(&record).expect("record serializes");
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|e| e.into_inner());
        file.write_all(&line)?;
        file.flush()
    }
}

#[derive(Clone)]
pub struct ProverState {
    backend: Arc<dyn AttestationBackend>,
    spec: Arc<QuestionnaireSpec>,
    log: Option<Arc<IssuanceLog>>,
}

impl ProverState {
    pub fn new(backend: Arc<dyn AttestationBackend>, spec: QuestionnaireSpec, log: Option<IssuanceLog>) -> Self {
        Self { backend, spec: Arc::new(spec), log: log.map(Arc::new) }
    }
}

pub fn router(state: ProverState) -> Router {
    Router::new()
        .route("/v1/infer", post(infer))
        .route("/v1/health", get(health))
        .route("/v1/spec", get(spec))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn attestation_error(e: AttestationError) -> ApiError {
    match e {
        AttestationError::BackendUnavailable(_) => {
            ApiError::new(StatusCode::SERVICE_UNAVAILABLE, e.kind(), e.to_string())
        }
        AttestationError::Inference(inner) => ApiError::bad_request(inner.kind(), inner.to_string()),
        AttestationError::ExternalProverFailure(_) => {
            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.kind(), e.to_string())
        }
    }
}

async fn infer(State(state): State<ProverState>, body: Bytes) -> Result<Response, ApiError> {
    let request_id = Uuid::new_v4().to_string();
    let started = Instant::now();
    let profile = parse_profile(&body).map_err(|e| {
        tracing::info!(%request_id, error = e.kind(), "rejected inference request");
        ApiError::bad_request(e.kind(), e.to_string())
    })?;
    drop(body);

    let backend = state.backend.clone();
    let spec = state.spec.clone();
    let attestation = tokio::task::spawn_blocking(move || backend.prove(&profile, &spec, unix_now()))
        .await
        .map_err(join_error)?
        .map_err(|e| {
            tracing::warn!(%request_id, error = e.kind(), "proving failed");
            attestation_error(e)
        })?;

    let doc = ProofDocument::from_attestation(&attestation);
    let wall_time_ms = started.elapsed().as_millis() as u64;
    if let Some(log) = &state.log {
        log.append(&request_id, &doc, wall_time_ms)
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Io", e.to_string()))?;
    }
    tracing::info!(
        %request_id,
        category = attestation.journal.category.as_str(),
        backend = doc.proof.backend_id.as_str(),
        wall_time_ms,
        "issued attestation"
    );
    let mut response = Json(doc).into_response();
    response.headers_mut().insert("x-request-id", HeaderValue::from_str(&request_id).expect("uuid is a valid header"));
    Ok(response)
}

async fn health(State(state): State<ProverState>) -> Json<Value> {
    let digest = state.backend.program_id().ok().map(|p| p.digest.to_hex());
    Json(json!({
        "status": "ok",
        "backend_id": state.backend.id().as_str(),
        "program_version": PROGRAM_VERSION,
        "program_digest": digest,
    }))
}

/// Questions and options for rendering the questionnaire; no scoring rules.
async fn spec(State(state): State<ProverState>) -> Json<Value> {
    let questions: Vec<Value> =
        state.spec.questions().iter().map(|q| json!({ "id": q.id, "text": q.text, "options": q.options })).collect();
    Json(json!({
        "version": state.spec.version(),
        "spec_digest": state.spec.digest(),
        "questions": questions,
    }))
}
