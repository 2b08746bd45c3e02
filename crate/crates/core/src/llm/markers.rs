//! Structured comment lines embedded in prompts.
//!
//! The prompt pipeline writes these into the system text; providers treat
//! them as ordinary text, the stub provider reads them to pick its policy.

use std::str::FromStr;

use crate::prompt::EmphasisLevel;

pub const PREFIX: &str = "# zkadvice:";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Proposal,
    Explanation,
    Dataset,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Proposal => "proposal",
            Stage::Explanation => "explanation",
            Stage::Dataset => "dataset",
        }
    }
}

impl FromStr for Stage {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "proposal" => Ok(Stage::Proposal),
            "explanation" => Ok(Stage::Explanation),
            "dataset" => Ok(Stage::Dataset),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextMarker {
    pub id: String,
    pub d0: EmphasisLevel,
    pub d1: EmphasisLevel,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetMarker {
    pub domain: String,
    pub concept: u32,
}

pub fn stage_line(stage: Stage) -> String {
    format!("{PREFIX}stage {}", stage.as_str())
}

pub fn context_line(marker: &ContextMarker) -> String {
    format!("{PREFIX}context id={} d0={} d1={}", marker.id, marker.d0.as_str(), marker.d1.as_str())
}

pub fn proposal_line(text: &str) -> String {
    // proposals are single-line option texts; newlines would break the marker
    format!("{PREFIX}proposal {}", text.replace(['\n', '\r'], " "))
}

pub fn dataset_line(marker: &DatasetMarker) -> String {
    format!("{PREFIX}dataset domain={} concept={}", marker.domain, marker.concept)
}

fn marker_values<'a>(text: &'a str, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
    text.lines().filter_map(move |line| {
        let rest = line.trim_start().strip_prefix(PREFIX)?;
        let value = rest.strip_prefix(name)?;
        value.strip_prefix(' ').or(value.is_empty().then_some(""))
    })
}

fn key_values(value: &str) -> impl Iterator<Item = (&str, &str)> {
    value.split_whitespace().filter_map(|kv| kv.split_once('='))
}

pub fn parse_stage(text: &str) -> Option<Stage> {
    marker_values(text, "stage").next()?.trim().parse().ok()
}

pub fn parse_context(text: &str) -> Option<ContextMarker> {
    let value = marker_values(text, "context").next()?;
    let (mut id, mut d0, mut d1) = (None, None, None);
    for (k, v) in key_values(value) {
        match k {
            "id" => id = Some(v.to_string()),
            "d0" => d0 = v.parse().ok(),
            "d1" => d1 = v.parse().ok(),
            _ => {}
        }
    }
    Some(ContextMarker { id: id?, d0: d0?, d1: d1? })
}

pub fn parse_proposal(text: &str) -> Option<&str> {
    marker_values(text, "proposal").next().map(str::trim)
}

pub fn parse_dataset(text: &str) -> Option<DatasetMarker> {
    let value = marker_values(text, "dataset").next()?;
    let (mut domain, mut concept) = (None, None);
    for (k, v) in key_values(value) {
        match k {
            "domain" => domain = Some(v.to_string()),
            "concept" => concept = v.parse().ok(),
            _ => {}
        }
    }
    Some(DatasetMarker { domain: domain?, concept: concept? })
}

/// Text with every marker line removed.
pub fn strip(text: &str) -> String {
    text.lines().filter(|line| !line.trim_start().starts_with(PREFIX)).collect::<Vec<_>>().join("\n")
}
