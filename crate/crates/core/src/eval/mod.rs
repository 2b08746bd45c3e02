//! Evaluation harness: profile sampling, attestation benchmarks, the advice
//! corpus, condition runs and their reports.

mod bench;
mod dataset;
mod report;
mod run;
mod sampler;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::AttestationError;
use crate::inference::InferenceError;
use crate::inference::RiskCategory;
use crate::prompt::{OptionSet, ScoredOption};

pub use bench::{bench_attestation, timing_csv, BenchColumn, BenchSummary, TimingRecord, BENCH_BACKENDS};
pub use dataset::{
    fixture_corpus, generate_dataset, read_corpus, write_corpus, DatasetReport, DatasetSource, CONCEPTS_PER_DOMAIN,
    FIXTURE_CORPUS,
};
pub use report::{write_reports, ConditionSummary, EvalSummary, ScoreHistogram};
pub use run::{run_conditions, score_distribution, trial_seed, EvalRecord, RunFailure, RunOutput};
pub use sampler::{sample_profiles, PROFILES_PER_CATEGORY};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("category {0:?} has fewer profiles than the sample requires")]
    StratumExhausted(RiskCategory),
    #[error("generation source unavailable: {0}")]
    GenerationSourceUnavailable(String),
    #[error("no records for {0}")]
    EmptySelection(String),
    #[error("invalid corpus line {line}: {reason}")]
    InvalidCorpus { line: usize, reason: String },
    #[error("benchmark verification failed for profile {0}")]
    VerificationFailed(u32),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Attestation(#[from] AttestationError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl EvalError {
    pub fn kind(&self) -> &'static str {
        match self {
            EvalError::StratumExhausted(_) => "StratumExhausted",
            EvalError::GenerationSourceUnavailable(_) => "GenerationSourceUnavailable",
            EvalError::EmptySelection(_) => "EmptySelection",
            EvalError::InvalidCorpus { .. } => "InvalidCorpus",
            EvalError::VerificationFailed(_) => "VerificationFailed",
            EvalError::Inference(e) => e.kind(),
            EvalError::Attestation(e) => e.kind(),
            EvalError::Io(_) => "Io",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConceptPair {
    pub negative_pole: String,
    pub positive_pole: String,
}

/// One advice trial: a concept with opposing trait texts and five options.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalInstance {
    pub id: String,
    pub domain: String,
    pub concept: ConceptPair,
    /// Negative-pole tendencies, treated as unverified.
    pub d0_text: String,
    /// Positive-pole tendencies, treated as verified.
    pub d1_text: String,
    pub options: Vec<ScoredOption>,
    pub query: String,
}

impl EvalInstance {
    pub fn validate(&self) -> Result<OptionSet, String> {
        let fields = [
            ("id", &self.id),
            ("domain", &self.domain),
            ("negative_pole", &self.concept.negative_pole),
            ("positive_pole", &self.concept.positive_pole),
            ("d0_text", &self.d0_text),
            ("d1_text", &self.d1_text),
            ("query", &self.query),
        ];
        if let Some((name, _)) = fields.iter().find(|(_, v)| v.trim().is_empty()) {
            return Err(format!("{name} is empty"));
        }
        if self.d0_text == self.d1_text || self.concept.negative_pole == self.concept.positive_pole {
            return Err("trait poles must differ".into());
        }
        OptionSet::new(self.options.clone()).map_err(|e| e.to_string())
    }
}
