//! Two-stage advice generation over a partition of user traits.
//!
//! Traits split into `d0` (free text the user states about themselves,
//! unverified) and `d1` (claims rendered from journals that verified). A
//! context set re-renders the same partition with different emphasis, and a
//! condition picks one context for the proposal call and one for the
//! explanation call.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attestation::{Journal, VerificationOutcome};
use crate::digest::Digest32;
use crate::llm::markers::{self, ContextMarker, Stage};
use crate::llm::{ChatRequest, LlmClient, LlmError};

pub const OPTION_COUNT: usize = 5;
pub const MAX_PROPOSAL_RETRIES: u32 = 3;

const DEFAULT_CONTEXTS: &str = include_str!("../data/templates/contexts.json");
const DEFAULT_CONTEXT_FILES: [(&str, &str); 4] = [
    ("c0.txt", include_str!("../data/templates/c0.txt")),
    ("c1.txt", include_str!("../data/templates/c1.txt")),
    ("c2.txt", include_str!("../data/templates/c2.txt")),
    ("c3.txt", include_str!("../data/templates/c3.txt")),
];
const DEFAULT_PROPOSAL: &str = include_str!("../data/templates/proposal.txt");
const DEFAULT_EXPLANATION: &str = include_str!("../data/templates/explanation.txt");
const DEFAULT_PRESETS: &str = include_str!("../data/option_presets.json");

const RETRY_REMINDER: &str =
    "Your previous reply could not be matched to an option. Reply with a single digit from 1 to 5 and nothing else.";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("could not parse an option index after {} attempts", .raw_outputs.len())]
    ProposalParseFailure { raw_outputs: Vec<String> },
    #[error("model returned an empty explanation")]
    EmptyModelOutput,
    #[error("unknown context id {0:?}")]
    UnknownContext(String),
    #[error("invalid option set: {0}")]
    InvalidOptionSet(String),
    #[error("invalid templates: {0}")]
    InvalidTemplate(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

impl PromptError {
    pub fn kind(&self) -> &'static str {
        match self {
            PromptError::ProposalParseFailure { .. } => "ProposalParseFailure",
            PromptError::EmptyModelOutput => "EmptyModelOutput",
            PromptError::UnknownContext(_) => "UnknownContext",
            PromptError::InvalidOptionSet(_) => "InvalidOptionSet",
            PromptError::InvalidTemplate(_) => "InvalidTemplate",
            PromptError::Llm(e) => e.kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmphasisLevel {
    None,
    Moderate,
    Strong,
}

impl EmphasisLevel {
    pub fn rank(self) -> u8 {
        self as u8
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EmphasisLevel::None => "none",
            EmphasisLevel::Moderate => "moderate",
            EmphasisLevel::Strong => "strong",
        }
    }
}

impl FromStr for EmphasisLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(EmphasisLevel::None),
            "moderate" => Ok(EmphasisLevel::Moderate),
            "strong" => Ok(EmphasisLevel::Strong),
            other => Err(format!("unknown emphasis level {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoredOption {
    pub text: String,
    pub score: i8,
}

impl ScoredOption {
    pub fn new(text: impl Into<String>, score: i8) -> Self {
        Self { text: text.into(), score }
    }
}

/// Exactly five options whose scores are a permutation of -2..=2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ScoredOption>", into = "Vec<ScoredOption>")]
pub struct OptionSet(Vec<ScoredOption>);

impl TryFrom<Vec<ScoredOption>> for OptionSet {
    type Error = PromptError;

    fn try_from(options: Vec<ScoredOption>) -> Result<Self, Self::Error> {
        OptionSet::new(options)
    }
}

impl From<OptionSet> for Vec<ScoredOption> {
    fn from(set: OptionSet) -> Self {
        set.0
    }
}

impl OptionSet {
    pub fn new(mut options: Vec<ScoredOption>) -> Result<Self, PromptError> {
        let invalid = |m: &str| Err(PromptError::InvalidOptionSet(m.to_string()));
        if options.len() != OPTION_COUNT {
            return invalid("exactly five options are required");
        }
        if options.iter().any(|o| o.text.trim().is_empty()) {
            return invalid("option texts must be non-empty");
        }
        let mut scores: Vec<i8> = options.iter().map(|o| o.score).collect();
        scores.sort_unstable();
        if scores != [-2, -1, 0, 1, 2] {
            return invalid("scores must cover -2..=2 exactly once each");
        }
        let mut texts: Vec<&str> = options.iter().map(|o| o.text.as_str()).collect();
        texts.sort_unstable();
        texts.dedup();
        if texts.len() != OPTION_COUNT {
            return invalid("option texts must be distinct");
        }
        options.sort_by_key(|o| std::cmp::Reverse(o.score));
        Ok(Self(options))
    }

    /// Options in presentation order: most positive first, indices 1..=5.
    pub fn presented(&self) -> &[ScoredOption] {
        &self.0
    }

    pub fn contains(&self, option: &ScoredOption) -> bool {
        self.0.contains(option)
    }

    pub fn numbered_list(&self) -> String {
        self.0.iter().enumerate().map(|(i, o)| format!("{}. {}", i + 1, o.text)).collect::<Vec<_>>().join("\n")
    }
}

/// Bundled named option sets, keyed by preset name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionPreset {
    pub domain: String,
    pub options: OptionSet,
}

pub fn default_option_presets() -> BTreeMap<String, OptionPreset> {
    serde_json::from_str(DEFAULT_PRESETS).expect("bundled presets are valid")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClaimProvenance {
    /// Rendered from a journal that verified against the pinned program.
    Attested { program_version: String, spec_digest: Digest32 },
    /// Taken as verified by an evaluation corpus.
    EvaluationFixture,
}

/// A `d1` statement. Construction from a journal requires a `Valid` outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifiedClaim {
    pub statement: String,
    pub provenance: ClaimProvenance,
}

impl VerifiedClaim {
    pub fn from_journal(journal: &Journal, outcome: VerificationOutcome) -> Option<Self> {
        if outcome != VerificationOutcome::Valid {
            return None;
        }
        Some(Self {
            statement: format!(
                "The user's risk tolerance category is {}, as computed by {} from their questionnaire answers.",
                journal.category.label(),
                journal.program_version
            ),
            provenance: ClaimProvenance::Attested {
                program_version: journal.program_version.clone(),
                spec_digest: journal.spec_digest,
            },
        })
    }

    pub fn evaluation_fixture(statement: impl Into<String>) -> Self {
        Self { statement: statement.into(), provenance: ClaimProvenance::EvaluationFixture }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitPartition {
    pub d0_text: String,
    pub d1_claims: Vec<VerifiedClaim>,
}

impl TraitPartition {
    pub fn new(d0_text: impl Into<String>, d1_claims: Vec<VerifiedClaim>) -> Self {
        Self { d0_text: d0_text.into(), d1_claims }
    }

    pub fn d1_text(&self) -> String {
        self.d1_claims.iter().map(|c| c.statement.as_str()).collect::<Vec<_>>().join(" ")
    }

    /// Free-text traits followed by every verified claim.
    pub fn combined_text(&self) -> String {
        let mut parts = Vec::new();
        if !self.d0_text.trim().is_empty() {
            parts.push(self.d0_text.trim().to_string());
        }
        parts.extend(self.d1_claims.iter().map(|c| c.statement.clone()));
        parts.join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextDef {
    pub id: String,
    pub emphasis_d0: EmphasisLevel,
    pub emphasis_d1: EmphasisLevel,
    pub template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Context {
    pub id: String,
    pub emphasis_d0: EmphasisLevel,
    pub emphasis_d1: EmphasisLevel,
    pub rendered_text: String,
}

impl Context {
    fn marker(&self) -> ContextMarker {
        ContextMarker { id: self.id.clone(), d0: self.emphasis_d0, d1: self.emphasis_d1 }
    }
}

/// Context templates plus the two stage instructions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    /// Context definitions with `template` holding the template text.
    contexts: Vec<ContextDef>,
    proposal: String,
    explanation: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        let defs: Vec<ContextDef> = serde_json::from_str(DEFAULT_CONTEXTS).expect("bundled contexts parse");
        let contexts = defs
            .into_iter()
            .map(|mut d| {
                let (_, text) = DEFAULT_CONTEXT_FILES
                    .iter()
                    .find(|(name, _)| *name == d.template)
                    .expect("bundled context file exists");
                d.template = text.trim_end().to_string();
                d
            })
            .collect();
        Self::new(contexts, DEFAULT_PROPOSAL.trim_end(), DEFAULT_EXPLANATION.trim_end())
            .expect("bundled templates are valid")
    }
}

impl PromptTemplates {
    pub fn new(
        contexts: Vec<ContextDef>,
        proposal: impl Into<String>,
        explanation: impl Into<String>,
    ) -> Result<Self, PromptError> {
        let (proposal, explanation) = (proposal.into(), explanation.into());
        let invalid = |m: String| Err(PromptError::InvalidTemplate(m));
        if contexts.is_empty() {
            return invalid("at least one context is required".into());
        }
        let mut ids: Vec<&str> = contexts.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != contexts.len() {
            return invalid("context ids must be unique".into());
        }
        for c in &contexts {
            if c.template.trim().is_empty() {
                return invalid(format!("context {} has an empty template", c.id));
            }
            if c.emphasis_d0 == EmphasisLevel::None && c.template.contains("{d0}") {
                return invalid(format!("context {} does not emphasize d0 but references it", c.id));
            }
            if c.emphasis_d1 == EmphasisLevel::None && c.template.contains("{d1}") {
                return invalid(format!("context {} does not emphasize d1 but references it", c.id));
            }
        }
        for (name, template, required) in [
            ("proposal", &proposal, &["{query}", "{options}"][..]),
            ("explanation", &explanation, &["{query}", "{proposal}"][..]),
        ] {
            if let Some(missing) = required.iter().find(|p| !template.contains(*p)) {
                return invalid(format!("{name} instructions lack placeholder {missing}"));
            }
        }
        Ok(Self { contexts, proposal, explanation })
    }

    /// Loads `contexts.json`, the context files it names, `proposal.txt` and
    /// `explanation.txt` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self, PromptError> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name))
                .map(|s| s.trim_end().to_string())
                .map_err(|e| PromptError::InvalidTemplate(format!("{name}: {e}")))
        };
        let defs: Vec<ContextDef> = serde_json::from_str(&read("contexts.json")?)
            .map_err(|e| PromptError::InvalidTemplate(format!("contexts.json: {e}")))?;
        let contexts = defs
            .into_iter()
            .map(|mut d| {
                d.template = read(&d.template)?;
                Ok(d)
            })
            .collect::<Result<Vec<_>, PromptError>>()?;
        Self::new(contexts, read("proposal.txt")?, read("explanation.txt")?)
    }

    pub fn context_ids(&self) -> Vec<&str> {
        self.contexts.iter().map(|c| c.id.as_str()).collect()
    }

    pub fn has_context(&self, id: &str) -> bool {
        self.contexts.iter().any(|c| c.id == id)
    }
}

/// Single-pass `{name}` substitution; substituted values are never rescanned.
pub fn render_template(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find('{') {
        out.push_str(&rest[..start]);
        let tail = &rest[start..];
        let hit = tail.find('}').and_then(|end| {
            let name = &tail[1..end];
            values.iter().find(|(k, _)| *k == name).map(|(_, v)| (end, *v))
        });
        match hit {
            Some((end, value)) => {
                out.push_str(value);
                rest = &tail[end + 1..];
            }
            None => {
                out.push('{');
                rest = &tail[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

/// Renders every context of the set for a partition.
pub fn build_context_set(partition: &TraitPartition, templates: &PromptTemplates) -> Vec<Context> {
    let d0 = if partition.d0_text.trim().is_empty() {
        "none provided".to_string()
    } else {
        partition.d0_text.trim().to_string()
    };
    let d1 = if partition.d1_claims.is_empty() { "none available".to_string() } else { partition.d1_text() };
    templates
        .contexts
        .iter()
        .map(|def| {
            let mut values = Vec::with_capacity(2);
            if def.emphasis_d0 != EmphasisLevel::None {
                values.push(("d0", d0.as_str()));
            }
            if def.emphasis_d1 != EmphasisLevel::None {
                values.push(("d1", d1.as_str()));
            }
            Context {
                id: def.id.clone(),
                emphasis_d0: def.emphasis_d0,
                emphasis_d1: def.emphasis_d1,
                rendered_text: render_template(&def.template, &values),
            }
        })
        .collect()
}

pub fn find_context<'a>(contexts: &'a [Context], id: &str) -> Result<&'a Context, PromptError> {
    contexts.iter().find(|c| c.id == id).ok_or_else(|| PromptError::UnknownContext(id.to_string()))
}

/// Which context feeds each generation stage.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionConfig {
    pub c_prop: String,
    pub c_exp: String,
}

impl ConditionConfig {
    pub fn new(c_prop: impl Into<String>, c_exp: impl Into<String>) -> Self {
        Self { c_prop: c_prop.into(), c_exp: c_exp.into() }
    }

    /// `Cond0`..`Cond4`.
    pub fn standard(name: &str) -> Option<Self> {
        standard_conditions().into_iter().find(|(n, _)| n.eq_ignore_ascii_case(name)).map(|(_, c)| c)
    }

    pub fn validate(&self, templates: &PromptTemplates) -> Result<(), PromptError> {
        for id in [&self.c_prop, &self.c_exp] {
            if !templates.has_context(id) {
                return Err(PromptError::UnknownContext(id.clone()));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ConditionConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c_prop={}, c_exp={}", self.c_prop, self.c_exp)
    }
}

/// The five evaluated pairings; Cond4 deliberately contradicts itself.
pub fn standard_conditions() -> Vec<(&'static str, ConditionConfig)> {
    vec![
        ("Cond0", ConditionConfig::new("c0", "c0")),
        ("Cond1", ConditionConfig::new("c1", "c1")),
        ("Cond2", ConditionConfig::new("c2", "c2")),
        ("Cond3", ConditionConfig::new("c3", "c3")),
        ("Cond4", ConditionConfig::new("c3", "c1")),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proposal {
    pub selected: ScoredOption,
    pub raw_model_output: String,
    pub retries_used: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub text: String,
}

/// Maps a model reply to a 1-based option index.
///
/// Accepts a reply whose only number is a valid index, or a reply that is
/// verbatim one of the option texts.
pub fn parse_option_index(output: &str, options: &OptionSet) -> Option<usize> {
    let trimmed = output.trim().trim_matches(|c: char| c == '"' || c == '\'');
    if let Some(pos) = options.presented().iter().position(|o| o.text.eq_ignore_ascii_case(trimmed)) {
        return Some(pos + 1);
    }
    let mut numbers =
        trimmed.split(|c: char| !c.is_ascii_digit()).filter(|s| !s.is_empty()).map(|s| s.parse::<usize>().ok());
    let first = numbers.next()??;
    if numbers.any(|n| n != Some(first)) {
        return None;
    }
    (1..=OPTION_COUNT).contains(&first).then_some(first)
}

fn system_text(stage: Stage, context: &Context, extra: Option<String>) -> String {
    let mut lines = vec![markers::stage_line(stage), markers::context_line(&context.marker())];
    lines.extend(extra);
    lines.push(context.rendered_text.clone());
    lines.join("\n")
}

/// Asks for an option index, retrying up to three times with a reminder.
pub fn propose(
    llm: &dyn LlmClient,
    query: &str,
    templates: &PromptTemplates,
    context: &Context,
    options: &OptionSet,
    seed: Option<u64>,
) -> Result<Proposal, PromptError> {
    let system = system_text(Stage::Proposal, context, None);
    let base = render_template(&templates.proposal, &[("query", query), ("options", &options.numbered_list())]);
    let mut raw_outputs = Vec::new();
    for retry in 0..=MAX_PROPOSAL_RETRIES {
        let user = if retry == 0 { base.clone() } else { format!("{base}\n\n{RETRY_REMINDER}") };
        let response = llm.chat(&ChatRequest::new(system.clone(), user).with_seed(seed))?;
        if let Some(index) = parse_option_index(&response.text, options) {
            return Ok(Proposal {
                selected: options.presented()[index - 1].clone(),
                raw_model_output: response.text,
                retries_used: retry,
            });
        }
        raw_outputs.push(response.text);
    }
    Err(PromptError::ProposalParseFailure { raw_outputs })
}

/// Explains an already selected proposal under its own context.
pub fn explain(
    llm: &dyn LlmClient,
    query: &str,
    proposal: &Proposal,
    templates: &PromptTemplates,
    context: &Context,
    seed: Option<u64>,
) -> Result<Explanation, PromptError> {
    let system = system_text(Stage::Explanation, context, Some(markers::proposal_line(&proposal.selected.text)));
    let user = render_template(&templates.explanation, &[("query", query), ("proposal", &proposal.selected.text)]);
    let response = llm.chat(&ChatRequest::new(system, user).with_seed(seed))?;
    let text = response.text.trim();
    if text.is_empty() {
        return Err(PromptError::EmptyModelOutput);
    }
    Ok(Explanation { text: text.to_string() })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub proposal: Proposal,
    pub explanation: Explanation,
    pub context_prop: Context,
    pub context_exp: Context,
}

/// Runs both generation stages under one condition.
pub fn run_pipeline(
    llm: &dyn LlmClient,
    query: &str,
    partition: &TraitPartition,
    condition: &ConditionConfig,
    options: &OptionSet,
    templates: &PromptTemplates,
    seed: Option<u64>,
) -> Result<PipelineOutput, PromptError> {
    let contexts = build_context_set(partition, templates);
    let context_prop = find_context(&contexts, &condition.c_prop)?.clone();
    let context_exp = find_context(&contexts, &condition.c_exp)?.clone();
    let proposal = propose(llm, query, templates, &context_prop, options, seed)?;
    let explanation = explain(llm, query, &proposal, templates, &context_exp, seed)?;
    Ok(PipelineOutput { proposal, explanation, context_prop, context_exp })
}
