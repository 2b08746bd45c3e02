use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::report::ScoreHistogram;
use super::{EvalError, EvalInstance};
use crate::digest::sha256_parts;
use crate::embed::text_similarity;
use crate::llm::LlmClient;
use crate::prompt::{run_pipeline, ConditionConfig, PromptTemplates, TraitPartition, VerifiedClaim};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub condition: String,
    pub c_prop: String,
    pub c_exp: String,
    pub prop_score: i8,
    pub prop_text: String,
    pub exp_text: String,
    pub sim_exp_d0: f64,
    pub sim_exp_d1: f64,
    pub sim_exp_prop: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub instance_id: String,
    pub condition: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub records: Vec<EvalRecord>,
    pub failures: Vec<RunFailure>,
}

/// Per-trial seed, independent of scheduling order.
pub fn trial_seed(global_seed: u64, instance_id: &str, condition: &str) -> u64 {
    let digest =
        sha256_parts(&[&global_seed.to_le_bytes(), &[0x1E], instance_id.as_bytes(), &[0x1E], condition.as_bytes()]);
    u64::from_le_bytes(digest.as_bytes()[..8].try_into().expect("8 bytes"))
}

fn run_trial(
    instance: &EvalInstance,
    name: &str,
    condition: &ConditionConfig,
    llm: &dyn LlmClient,
    templates: &PromptTemplates,
    global_seed: u64,
) -> Result<EvalRecord, RunFailure> {
    let fail = |kind: &str, message: String| RunFailure {
        instance_id: instance.id.clone(),
        condition: name.to_string(),
        kind: kind.to_string(),
        message,
    };
    let options = instance.validate().map_err(|m| fail("InvalidInstance", m))?;
    let partition = TraitPartition::new(
        instance.d0_text.clone(),
        vec![VerifiedClaim::evaluation_fixture(instance.d1_text.clone())],
    );
    let seed = trial_seed(global_seed, &instance.id, name);
    let out = run_pipeline(llm, &instance.query, &partition, condition, &options, templates, Some(seed))
        .map_err(|e| fail(e.kind(), e.to_string()))?;
    let exp = &out.explanation.text;
    let sim = |other: &str| text_similarity(exp, other).map_err(|e| fail("EmptyText", e.to_string()));
    Ok(EvalRecord {
        instance_id: instance.id.clone(),
        condition: name.to_string(),
        c_prop: condition.c_prop.clone(),
        c_exp: condition.c_exp.clone(),
        prop_score: out.proposal.selected.score,
        prop_text: out.proposal.selected.text.clone(),
        sim_exp_d0: sim(&instance.d0_text)?,
        sim_exp_d1: sim(&instance.d1_text)?,
        sim_exp_prop: sim(&out.proposal.selected.text)?,
        exp_text: out.explanation.text,
    })
}

/// One record per (instance, condition), in instance-major order.
///
/// Trials run in parallel; failures are collected instead of aborting.
pub fn run_conditions(
    instances: &[EvalInstance],
    conditions: &[(String, ConditionConfig)],
    llm: &dyn LlmClient,
    templates: &PromptTemplates,
    global_seed: u64,
) -> RunOutput {
    let trials: Vec<(&EvalInstance, &(String, ConditionConfig))> =
        instances.iter().flat_map(|i| conditions.iter().map(move |c| (i, c))).collect();
    let results: Vec<Result<EvalRecord, RunFailure>> = trials
        .par_iter()
        .map(|(inst, (name, cond))| run_trial(inst, name, cond, llm, templates, global_seed))
        .collect();
    let mut output = RunOutput { records: Vec::with_capacity(results.len()), failures: Vec::new() };
    for result in results {
        match result {
            Ok(r) => output.records.push(r),
            Err(f) => output.failures.push(f),
        }
    }
    output
}

/// Histogram of proposal scores for one condition.
pub fn score_distribution(records: &[EvalRecord], condition: &str) -> Result<ScoreHistogram, EvalError> {
    let scores: Vec<i8> = records.iter().filter(|r| r.condition == condition).map(|r| r.prop_score).collect();
    ScoreHistogram::from_scores(&scores).ok_or_else(|| EvalError::EmptySelection(condition.to_string()))
}
