//! The advice entity: verifies a presented attestation, then runs the
//! two-stage prompt pipeline with whatever claims survived verification.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::{
    verify_document_detailed, AttestationBackend, ProgramId, ProofDocument, VerificationOutcome, VerifierPolicy,
};
use crate::llm::LlmClient;
use crate::prompt::{
    default_option_presets, run_pipeline, ConditionConfig, OptionPreset, OptionSet, PipelineOutput, PromptError,
    PromptTemplates, ScoredOption, TraitPartition, VerifiedClaim,
};

#[derive(Debug, Error)]
pub enum AdvisorError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

impl AdvisorError {
    pub fn kind(&self) -> &'static str {
        match self {
            AdvisorError::InvalidRequest(_) => "InvalidRequest",
            AdvisorError::Prompt(e) => e.kind(),
        }
    }
}

/// A standard condition name such as `"Cond2"`, or an explicit context pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConditionChoice {
    Named(String),
    Explicit(ConditionConfig),
}

impl Default for ConditionChoice {
    fn default() -> Self {
        ConditionChoice::Named("Cond0".into())
    }
}

impl ConditionChoice {
    pub fn resolve(&self) -> Result<ConditionConfig, AdvisorError> {
        match self {
            ConditionChoice::Named(name) => ConditionConfig::standard(name)
                .ok_or_else(|| AdvisorError::InvalidRequest(format!("unknown condition {name:?}"))),
            ConditionChoice::Explicit(cfg) => Ok(cfg.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdviseRequest {
    pub query: String,
    #[serde(default)]
    pub d0_text: String,
    #[serde(default)]
    pub domain: Option<String>,
    /// Attestation to verify before its claim is used.
    #[serde(default)]
    pub attestation: Option<ProofDocument>,
    /// Explicit options; otherwise `option_preset`, otherwise the domain preset.
    #[serde(default)]
    pub options: Option<Vec<ScoredOption>>,
    #[serde(default)]
    pub option_preset: Option<String>,
    #[serde(default)]
    pub condition: ConditionChoice,
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Verification status shown to the user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerificationStatus {
    /// No attestation was presented.
    NoClaim,
    Valid,
    InvalidProof,
    ProgramMismatch,
    MalformedJournal,
    Expired,
}

impl From<VerificationOutcome> for VerificationStatus {
    fn from(outcome: VerificationOutcome) -> Self {
        match outcome {
            VerificationOutcome::Valid => VerificationStatus::Valid,
            VerificationOutcome::InvalidProof => VerificationStatus::InvalidProof,
            VerificationOutcome::ProgramMismatch => VerificationStatus::ProgramMismatch,
            VerificationOutcome::MalformedJournal => VerificationStatus::MalformedJournal,
            VerificationOutcome::Expired => VerificationStatus::Expired,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextsUsed {
    pub c_prop: String,
    pub c_exp: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdviseResponse {
    pub proposal: crate::prompt::Proposal,
    pub explanation: crate::prompt::Explanation,
    pub verification: VerificationStatus,
    pub contexts_used: ContextsUsed,
    pub d1_claims: Vec<VerifiedClaim>,
    pub provider_id: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdvisorPolicy {
    /// Reject attestations older than this many seconds.
    pub max_age_secs: Option<u64>,
}

pub struct Advisor {
    backend: Arc<dyn AttestationBackend>,
    pinned: ProgramId,
    llm: Arc<dyn LlmClient>,
    templates: PromptTemplates,
    presets: BTreeMap<String, OptionPreset>,
    policy: AdvisorPolicy,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

impl Advisor {
    pub fn new(backend: Arc<dyn AttestationBackend>, pinned: ProgramId, llm: Arc<dyn LlmClient>) -> Self {
        Self {
            backend,
            pinned,
            llm,
            templates: PromptTemplates::default(),
            presets: default_option_presets(),
            policy: AdvisorPolicy::default(),
        }
    }

    pub fn with_templates(mut self, templates: PromptTemplates) -> Self {
        self.templates = templates;
        self
    }

    pub fn with_presets(mut self, presets: BTreeMap<String, OptionPreset>) -> Self {
        self.presets = presets;
        self
    }

    pub fn with_policy(mut self, policy: AdvisorPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn pinned(&self) -> &ProgramId {
        &self.pinned
    }

    pub fn backend(&self) -> &dyn AttestationBackend {
        self.backend.as_ref()
    }

    pub fn provider_id(&self) -> &str {
        self.llm.provider_id()
    }

    pub fn presets(&self) -> &BTreeMap<String, OptionPreset> {
        &self.presets
    }

    /// Verifies a document against the pinned program and this advisor's policy.
    pub fn verify(&self, doc: &ProofDocument) -> Result<crate::attestation::Journal, VerificationOutcome> {
        let policy = VerifierPolicy { max_age_secs: self.policy.max_age_secs, now: unix_now() };
        verify_document_detailed(self.backend.as_ref(), doc, &self.pinned, &policy)
    }

    fn resolve_options(&self, request: &AdviseRequest) -> Result<OptionSet, AdvisorError> {
        if let Some(options) = &request.options {
            return OptionSet::new(options.clone()).map_err(|e| AdvisorError::InvalidRequest(e.to_string()));
        }
        let key = request.option_preset.as_deref().or_else(|| {
            let domain = request.domain.as_deref()?;
            self.presets.iter().find(|(_, p)| p.domain == domain).map(|(k, _)| k.as_str())
        });
        let key = key.ok_or_else(|| {
            AdvisorError::InvalidRequest("request needs options, an option preset, or a domain with a preset".into())
        })?;
        self.presets
            .get(key)
            .map(|p| p.options.clone())
            .ok_or_else(|| AdvisorError::InvalidRequest(format!("unknown option preset {key:?}")))
    }

    pub fn advise(&self, request: &AdviseRequest) -> Result<AdviseResponse, AdvisorError> {
        self.advise_traced(request).map(|(response, _)| response)
    }

    /// Like [`Advisor::advise`], also returning the rendered contexts.
    pub fn advise_traced(&self, request: &AdviseRequest) -> Result<(AdviseResponse, PipelineOutput), AdvisorError> {
        if request.query.trim().is_empty() {
            return Err(AdvisorError::InvalidRequest("query must be non-empty".into()));
        }
        let condition = request.condition.resolve()?;
        condition.validate(&self.templates).map_err(|e| AdvisorError::InvalidRequest(e.to_string()))?;
        let options = self.resolve_options(request)?;

        let (verification, d1_claims) = match &request.attestation {
            None => (VerificationStatus::NoClaim, Vec::new()),
            Some(doc) => match self.verify(doc) {
                Ok(journal) => (
                    VerificationStatus::Valid,
                    VerifiedClaim::from_journal(&journal, VerificationOutcome::Valid).into_iter().collect(),
                ),
                Err(outcome) => (outcome.into(), Vec::new()),
            },
        };

        let partition = TraitPartition::new(request.d0_text.clone(), d1_claims.clone());
        let output = run_pipeline(
            self.llm.as_ref(),
            &request.query,
            &partition,
            &condition,
            &options,
            &self.templates,
            request.seed,
        )?;
        let response = AdviseResponse {
            proposal: output.proposal.clone(),
            explanation: output.explanation.clone(),
            verification,
            contexts_used: ContextsUsed { c_prop: condition.c_prop.clone(), c_exp: condition.c_exp.clone() },
            d1_claims,
            provider_id: self.llm.provider_id().to_string(),
        };
        Ok((response, output))
    }
}
