use serde::{Deserialize, Serialize};

use super::{EvalError, EvalInstance};
use crate::llm::markers::{self, DatasetMarker, Stage};
use crate::llm::{ChatRequest, LlmClient, LlmError};

pub use crate::llm::CONCEPTS_PER_DOMAIN;

/// The committed 1000-instance corpus, one JSON instance per line.
pub const FIXTURE_CORPUS: &str = include_str!("../../data/corpus.jsonl");

const GENERATION_INSTRUCTIONS: &str = "You write evaluation data for a personal advice assistant. \
For the given domain, invent a pair of opposing personality tendencies: a cautious or negative pole and a \
proactive or positive pole. Describe each pole as a one-sentence user trait, write the question the user \
asks, and write five candidate actions scored from -2 (fits the negative pole) to +2 (fits the positive pole). \
Reply with one JSON object with the fields id, domain, concept {negative_pole, positive_pole}, d0_text \
(negative pole trait), d1_text (positive pole trait), options (five objects with text and score) and query.";

pub enum DatasetSource<'a> {
    /// The committed corpus.
    Fixture,
    /// Ask a model for each (domain, concept) cell.
    Llm(&'a dyn LlmClient),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetReport {
    pub instances: Vec<EvalInstance>,
    pub requested: usize,
    pub dropped: usize,
    /// `(cell id, reason)` for every dropped cell.
    pub drop_reasons: Vec<(String, String)>,
}

pub fn read_corpus(text: &str) -> Result<Vec<EvalInstance>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            let inst: EvalInstance = serde_json::from_str(line)
                .map_err(|e| EvalError::InvalidCorpus { line: i + 1, reason: e.to_string() })?;
            inst.validate().map_err(|reason| EvalError::InvalidCorpus { line: i + 1, reason })?;
            Ok(inst)
        })
        .collect()
}

pub fn write_corpus(instances: &[EvalInstance]) -> String {
    let mut out = String::new();
    for inst in instances {
        out.push_str(&serde_json::to_string(inst).expect("instance serializes"));
        out.push('\n');
    }
    out
}

pub fn fixture_corpus() -> Vec<EvalInstance> {
    read_corpus(FIXTURE_CORPUS).expect("committed corpus is valid")
}

fn parse_reply(text: &str) -> Result<EvalInstance, String> {
    let start = text.find('{').ok_or("reply contains no JSON object")?;
    let end = text.rfind('}').ok_or("reply contains no JSON object")?;
    if end < start {
        return Err("reply contains no JSON object".into());
    }
    serde_json::from_str(&text[start..=end]).map_err(|e| e.to_string())
}

/// Builds a corpus of up to `domains.len() * concepts_per_domain` instances.
///
/// Cells whose reply is unparseable or invalid are dropped and counted.
pub fn generate_dataset(
    source: DatasetSource<'_>,
    domains: &[&str],
    concepts_per_domain: u32,
) -> Result<DatasetReport, EvalError> {
    let llm = match source {
        DatasetSource::Fixture => {
            let instances = fixture_corpus();
            let requested = instances.len();
            return Ok(DatasetReport { instances, requested, dropped: 0, drop_reasons: Vec::new() });
        }
        DatasetSource::Llm(llm) => llm,
    };

    let mut report = DatasetReport {
        instances: Vec::new(),
        requested: domains.len() * concepts_per_domain as usize,
        dropped: 0,
        drop_reasons: Vec::new(),
    };
    for domain in domains {
        for concept in 0..concepts_per_domain {
            let cell = format!("{domain}-{concept:03}");
            let system = [
                markers::stage_line(Stage::Dataset),
                markers::dataset_line(&DatasetMarker { domain: domain.to_string(), concept }),
                GENERATION_INSTRUCTIONS.to_string(),
            ]
            .join("\n");
            let user = format!(
                "Domain: {domain}. This is concept {} of {concepts_per_domain}; make it distinct from the others.",
                concept + 1
            );
            let request = ChatRequest::new(system, user).with_seed(Some(u64::from(concept)));
            let outcome = match llm.chat(&request) {
                Ok(response) => parse_reply(&response.text).and_then(|mut inst| {
                    inst.id = cell.clone();
                    inst.domain = domain.to_string();
                    inst.validate().map(|_| inst)
                }),
                Err(LlmError::ProviderUnavailable(msg)) => return Err(EvalError::GenerationSourceUnavailable(msg)),
                Err(e) => Err(e.to_string()),
            };
            match outcome {
                Ok(inst) => report.instances.push(inst),
                Err(reason) => {
                    report.dropped += 1;
                    report.drop_reasons.push((cell, reason));
                }
            }
        }
    }
    Ok(report)
}
