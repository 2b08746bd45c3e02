//! Python bindings: trait inference, mock attestation and the advisor.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use zkadvice_core::advisor::{AdviseRequest, Advisor as CoreAdvisor};
use zkadvice_core::attestation::{
    verify_document, AttestationBackend, MockBackend, ProgramId, ProofDocument as CoreDocument,
};
use zkadvice_core::digest::Digest32;
use zkadvice_core::eval::sample_profiles as core_sample;
use zkadvice_core::inference::{self, AnswerProfile, QuestionnaireSpec, QUESTION_COUNT};
use zkadvice_core::llm::StubLlm;

fn value_error(kind: &str, message: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(format!("{kind}: {message}"))
}

fn profile(answers: Vec<u8>) -> PyResult<AnswerProfile> {
    let answers: [u8; QUESTION_COUNT] = answers.try_into().map_err(|a: Vec<u8>| {
        value_error("WrongAnswerCount", format!("expected {QUESTION_COUNT} answers, got {}", a.len()))
    })?;
    AnswerProfile::new(answers).map_err(|e| value_error(e.kind(), e))
}

fn pin(digest: Option<&str>, version: Option<String>) -> PyResult<ProgramId> {
    let mut pinned = ProgramId::trait_inference();
    if let Some(hex) = digest {
        pinned.digest = Digest32::from_hex(hex).map_err(|e| value_error("InvalidDigest", e))?;
    }
    if let Some(version) = version {
        pinned.version = version;
    }
    Ok(pinned)
}

#[pyclass(frozen, get_all)]
struct InferenceResult {
    category: String,
    total_score: u32,
    spec_digest: String,
    program_version: String,
}

/// Category, score and identifiers for one answer profile.
#[pyfunction]
fn infer(answers: Vec<u8>) -> PyResult<InferenceResult> {
    let r = inference::infer(&profile(answers)?, &QuestionnaireSpec::default_spec())
        .map_err(|e| value_error(e.kind(), e))?;
    Ok(InferenceResult {
        category: r.category.as_str().to_string(),
        total_score: r.total_score,
        spec_digest: r.spec_digest.to_hex(),
        program_version: r.program_version,
    })
}

#[pyfunction]
fn spec_digest() -> String {
    QuestionnaireSpec::default_spec().digest().to_hex()
}

#[pyfunction]
fn program_digest() -> String {
    ProgramId::trait_inference().digest.to_hex()
}

/// Number of profiles per category over the whole answer space.
#[pyfunction]
fn category_counts() -> PyResult<BTreeMap<String, u32>> {
    let counts = inference::enumerate_category_counts(&QuestionnaireSpec::default_spec())
        .map_err(|e| value_error(e.kind(), e))?;
    Ok(counts.into_iter().map(|(c, n)| (c.as_str().to_string(), n)).collect())
}

/// Ten profiles per category as `(profile_id, answers)` pairs.
#[pyfunction]
fn sample_profiles(seed: u64) -> PyResult<Vec<(u32, Vec<u8>)>> {
    let profiles = core_sample(&QuestionnaireSpec::default_spec(), seed).map_err(|e| value_error(e.kind(), e))?;
    Ok(profiles.iter().map(|p| (p.index(), p.answers().to_vec())).collect())
}

#[pyclass(frozen)]
struct ProofDocument(CoreDocument);

#[pymethods]
impl ProofDocument {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(|e| value_error("MalformedDocument", e))
    }

    fn to_json(&self) -> String {
        self.0.to_json_pretty()
    }

    #[getter]
    fn category(&self) -> Option<String> {
        self.0.journal.get("category").and_then(|c| c.as_str()).map(str::to_string)
    }

    #[getter]
    fn journal(&self) -> String {
        self.0.journal.to_string()
    }

    fn __repr__(&self) -> String {
        format!("ProofDocument(journal={})", self.0.journal)
    }
}

/// Proves trait inference with the mock backend.
#[pyclass(frozen)]
struct MockProver(MockBackend);

#[pymethods]
impl MockProver {
    #[new]
    fn new() -> Self {
        Self(MockBackend::default())
    }

    #[pyo3(signature = (answers, issued_at=None))]
    fn prove(&self, answers: Vec<u8>, issued_at: Option<u64>) -> PyResult<ProofDocument> {
        let issued_at =
            issued_at.unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        let attestation = self
            .0
            .prove(&profile(answers)?, &QuestionnaireSpec::default_spec(), issued_at)
            .map_err(|e| value_error(e.kind(), e))?;
        Ok(ProofDocument(CoreDocument::from_attestation(&attestation)))
    }
}

/// Verifies a mock proof document, returning the outcome name.
#[pyfunction]
#[pyo3(signature = (document, pin_digest=None, pin_version=None))]
fn verify(document: &ProofDocument, pin_digest: Option<&str>, pin_version: Option<String>) -> PyResult<String> {
    let pinned = pin(pin_digest, pin_version)?;
    Ok(verify_document(&MockBackend::default(), &document.0, &pinned).as_str().to_string())
}

/// Advisor backed by the mock verifier and the deterministic stub model.
#[pyclass(frozen)]
struct Advisor(CoreAdvisor);

#[pymethods]
impl Advisor {
    #[new]
    #[pyo3(signature = (pin_digest=None, pin_version=None))]
    fn new(pin_digest: Option<&str>, pin_version: Option<String>) -> PyResult<Self> {
        let pinned = pin(pin_digest, pin_version)?;
        Ok(Self(CoreAdvisor::new(Arc::new(MockBackend::default()), pinned, Arc::new(StubLlm::new()))))
    }

    /// Takes and returns the JSON bodies used by `POST /v1/advise`.
    fn advise(&self, py: Python<'_>, request_json: &str) -> PyResult<String> {
        let request: AdviseRequest =
            serde_json::from_str(request_json).map_err(|e| value_error("MalformedRequest", e))?;
        let response = py.detach(|| self.0.advise(&request)).map_err(|e| value_error(e.kind(), e))?;
        serde_json::to_string(&response).map_err(|e| value_error("Serialization", e))
    }
}

#[pymodule]
fn zkadvice(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("PROGRAM_VERSION", inference::PROGRAM_VERSION)?;
    m.add_class::<InferenceResult>()?;
    m.add_class::<ProofDocument>()?;
    m.add_class::<MockProver>()?;
    m.add_class::<Advisor>()?;
    m.add_function(wrap_pyfunction!(infer, m)?)?;
    m.add_function(wrap_pyfunction!(spec_digest, m)?)?;
    m.add_function(wrap_pyfunction!(program_digest, m)?)?;
    m.add_function(wrap_pyfunction!(category_counts, m)?)?;
    m.add_function(wrap_pyfunction!(sample_profiles, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
