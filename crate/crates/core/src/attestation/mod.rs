//! Attestation of the inference computation.
//!
//! A prover runs the inference over a private [`AnswerProfile`] and emits a
//! public [`Journal`] plus an opaque [`AttestationProof`]. A verifier pins the
//! [`ProgramId`] it trusts and checks the pair without ever seeing answers.

mod external;
mod mock;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::canonical::to_canonical_bytes;
use crate::digest::{sha256_parts, Digest32};
use crate::inference::{
    infer, program_identity_bytes, AnswerProfile, InferenceError, QuestionnaireSpec, RiskCategory, PROGRAM_VERSION,
    RECORD_SEPARATOR,
};

pub use external::{ExternalBackend, ExternalConfig};
pub use mock::{mock_payload, MockBackend};

#[derive(Debug, Error)]
pub enum AttestationError {
    #[error("attestation backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("external prover failed: {0}")]
    ExternalProverFailure(String),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

impl AttestationError {
    pub fn kind(&self) -> &'static str {
        match self {
            AttestationError::BackendUnavailable(_) => "BackendUnavailable",
            AttestationError::ExternalProverFailure(_) => "ExternalProverFailure",
            AttestationError::Inference(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BackendId {
    #[serde(rename = "mock")]
    Mock,
    #[serde(rename = "external-zkvm")]
    ExternalZkvm,
}

impl BackendId {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendId::Mock => "mock",
            BackendId::ExternalZkvm => "external-zkvm",
        }
    }
}

impl fmt::Display for BackendId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BackendId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mock" => Ok(BackendId::Mock),
            "external-zkvm" | "external" => Ok(BackendId::ExternalZkvm),
            other => Err(format!("unknown backend {other:?} (expected mock or external-zkvm)")),
        }
    }
}

/// Identity of an attested program build, pinned by verifiers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramId {
    pub digest: Digest32,
    pub version: String,
}

impl ProgramId {
    /// The trait inference program compiled into this crate.
    pub fn trait_inference() -> Self {
        Self {
            digest: sha256_parts(&[b"zkadvice-program", &[RECORD_SEPARATOR], &program_identity_bytes()]),
            version: PROGRAM_VERSION.to_string(),
        }
    }
}

/// Public output of an attested inference. Carries no answer data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Journal {
    pub category: RiskCategory,
    pub spec_digest: Digest32,
    pub program_version: String,
    /// UTC seconds since the Unix epoch.
    pub issued_at: u64,
}

impl Journal {
    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("journal serializes")
    }
}

pub fn encode_journal(journal: &Journal) -> Vec<u8> {
    to_canonical_bytes(&journal.to_value()).expect("journal holds integers only")
}

/// Decodes journal bytes, accepting only the canonical encoding.
pub fn decode_journal(bytes: &[u8]) -> Option<Journal> {
    let value: Value = serde_json::from_slice(bytes).ok()?;
    if to_canonical_bytes(&value).ok()? != bytes {
        return None;
    }
    serde_json::from_value(value).ok()
}

/// Opaque proof binding a journal to a program execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttestationProof {
    pub backend_id: BackendId,
    /// Program the prover claims to have executed.
    pub program_digest: Digest32,
    pub payload: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attestation {
    pub journal: Journal,
    pub proof: AttestationProof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationOutcome {
    Valid,
    InvalidProof,
    ProgramMismatch,
    MalformedJournal,
    /// Only produced when the verifier sets a maximum journal age.
    Expired,
}

impl VerificationOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            VerificationOutcome::Valid => "valid",
            VerificationOutcome::InvalidProof => "invalid_proof",
            VerificationOutcome::ProgramMismatch => "program_mismatch",
            VerificationOutcome::MalformedJournal => "malformed_journal",
            VerificationOutcome::Expired => "expired",
        }
    }
}

/// Optional verifier-side checks beyond proof validity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VerifierPolicy {
    /// Reject journals issued more than this many seconds before `now`.
    pub max_age_secs: Option<u64>,
    pub now: u64,
}

/// A proving and verifying toolchain for the inference program.
pub trait AttestationBackend: Send + Sync {
    fn id(&self) -> BackendId;

    /// Program this backend proves executions of.
    fn program_id(&self) -> Result<ProgramId, AttestationError>;

    fn prove(
        &self,
        profile: &AnswerProfile,
        spec: &QuestionnaireSpec,
        issued_at: u64,
    ) -> Result<Attestation, AttestationError>;

    /// Backend-specific check that `proof` binds exactly `journal_bytes` to
    /// `proof.program_digest`.
    fn check_proof(&self, journal_bytes: &[u8], proof: &AttestationProof) -> bool;
}

/// Computes the journal the honest program emits for these inputs.
pub fn journal_for(
    profile: &AnswerProfile,
    spec: &QuestionnaireSpec,
    issued_at: u64,
) -> Result<Journal, InferenceError> {
    let result = infer(profile, spec)?;
    Ok(Journal {
        category: result.category,
        spec_digest: result.spec_digest,
        program_version: result.program_version,
        issued_at,
    })
}

pub fn prove(
    backend: &dyn AttestationBackend,
    profile: &AnswerProfile,
    spec: &QuestionnaireSpec,
    issued_at: u64,
) -> Result<Attestation, AttestationError> {
    backend.prove(profile, spec, issued_at)
}

/// Verifies untrusted journal bytes and returns the decoded journal when valid.
pub fn verify_journal_bytes(
    backend: &dyn AttestationBackend,
    journal_bytes: &[u8],
    proof: &AttestationProof,
    pinned: &ProgramId,
    policy: &VerifierPolicy,
) -> Result<Journal, VerificationOutcome> {
    if proof.backend_id != backend.id() || proof.payload.is_empty() {
        return Err(VerificationOutcome::InvalidProof);
    }
    if proof.program_digest != pinned.digest {
        return Err(VerificationOutcome::ProgramMismatch);
    }
    if !backend.check_proof(journal_bytes, proof) {
        return Err(VerificationOutcome::InvalidProof);
    }
    let journal = decode_journal(journal_bytes).ok_or(VerificationOutcome::MalformedJournal)?;
    if journal.program_version != pinned.version {
        return Err(VerificationOutcome::ProgramMismatch);
    }
    if let Some(max_age) = policy.max_age_secs {
        if policy.now.saturating_sub(journal.issued_at) > max_age {
            return Err(VerificationOutcome::Expired);
        }
    }
    Ok(journal)
}

pub fn verify_encoded(
    backend: &dyn AttestationBackend,
    journal_bytes: &[u8],
    proof: &AttestationProof,
    pinned: &ProgramId,
) -> VerificationOutcome {
    match verify_journal_bytes(backend, journal_bytes, proof, pinned, &VerifierPolicy::default()) {
        Ok(_) => VerificationOutcome::Valid,
        Err(outcome) => outcome,
    }
}

pub fn verify(
    backend: &dyn AttestationBackend,
    journal: &Journal,
    proof: &AttestationProof,
    pinned: &ProgramId,
) -> VerificationOutcome {
    verify_encoded(backend, &encode_journal(journal), proof, pinned)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofWire {
    pub backend_id: BackendId,
    pub program_digest_hex: String,
    pub payload_hex: String,
}

/// Proof interchange document `{"journal": {...}, "proof": {...}}`.
///
/// The journal is kept as raw JSON so that whatever a client presents is
/// exactly what gets verified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofDocument {
    pub journal: Value,
    pub proof: ProofWire,
}

impl ProofDocument {
    pub fn from_attestation(attestation: &Attestation) -> Self {
        Self {
            journal: attestation.journal.to_value(),
            proof: ProofWire {
                backend_id: attestation.proof.backend_id,
                program_digest_hex: attestation.proof.program_digest.to_hex(),
                payload_hex: hex::encode(&attestation.proof.payload),
            },
        }
    }

    /// Canonical bytes of the presented journal, if it has a canonical form.
    pub fn journal_bytes(&self) -> Option<Vec<u8>> {
        to_canonical_bytes(&self.journal).ok()
    }

    pub fn proof(&self) -> Option<AttestationProof> {
        Some(AttestationProof {
            backend_id: self.proof.backend_id,
            program_digest: Digest32::from_hex(&self.proof.program_digest_hex).ok()?,
            payload: hex::decode(&self.proof.payload_hex).ok()?,
        })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("document serializes")
    }
}

/// Verifies an interchange document, returning the journal when valid.
pub fn verify_document_detailed(
    backend: &dyn AttestationBackend,
    doc: &ProofDocument,
    pinned: &ProgramId,
    policy: &VerifierPolicy,
) -> Result<Journal, VerificationOutcome> {
    let proof = doc.proof().ok_or(VerificationOutcome::InvalidProof)?;
    let bytes = doc.journal_bytes().ok_or(VerificationOutcome::MalformedJournal)?;
    verify_journal_bytes(backend, &bytes, &proof, pinned, policy)
}

pub fn verify_document(
    backend: &dyn AttestationBackend,
    doc: &ProofDocument,
    pinned: &ProgramId,
) -> VerificationOutcome {
    match verify_document_detailed(backend, doc, pinned, &VerifierPolicy::default()) {
        Ok(_) => VerificationOutcome::Valid,
        Err(outcome) => outcome,
    }
}
