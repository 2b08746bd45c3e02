use std::collections::BTreeSet;

use zkadvice_core::attestation::MockBackend;
use zkadvice_core::embed::tokenize;
use zkadvice_core::eval::{
    bench_attestation, fixture_corpus, run_conditions, sample_profiles, write_reports, BenchSummary, EvalSummary,
};
use zkadvice_core::inference::QuestionnaireSpec;
use zkadvice_core::llm::StubLlm;
use zkadvice_core::prompt::{
    run_pipeline, standard_conditions, ConditionConfig, PromptTemplates, TraitPartition, VerifiedClaim,
};

fn conditions() -> Vec<(String, ConditionConfig)> {
    standard_conditions().into_iter().map(|(n, c)| (n.to_string(), c)).collect()
}

fn full_summary() -> EvalSummary {
    let out = run_conditions(&fixture_corpus(), &conditions(), &StubLlm::new(), &PromptTemplates::default(), 7);
    assert!(out.failures.is_empty(), "{:?}", out.failures.first());
    assert_eq!(out.records.len(), 5000);
    EvalSummary::from_output(&out).unwrap()
}

#[test]
fn pipeline_is_deterministic() {
    let inst = &fixture_corpus()[17];
    let partition = TraitPartition::new(inst.d0_text.clone(), vec![VerifiedClaim::evaluation_fixture(&inst.d1_text)]);
    let options = inst.validate().unwrap();
    let templates = PromptTemplates::default();
    let cond = ConditionConfig::new("c3", "c1");
    let run = || run_pipeline(&StubLlm::new(), &inst.query, &partition, &cond, &options, &templates, Some(5)).unwrap();
    let first = run();
    for _ in 0..10 {
        assert_eq!(run(), first);
    }
    assert_ne!(first.context_prop.rendered_text, first.context_exp.rendered_text);
}

#[test]
fn explanation_under_c1_uses_only_d0_material() {
    let inst = &fixture_corpus()[3];
    let partition = TraitPartition::new(inst.d0_text.clone(), vec![VerifiedClaim::evaluation_fixture(&inst.d1_text)]);
    let options = inst.validate().unwrap();
    let cond = ConditionConfig::new("c1", "c1");
    let out =
        run_pipeline(&StubLlm::new(), &inst.query, &partition, &cond, &options, &PromptTemplates::default(), Some(1))
            .unwrap();
    let exp: BTreeSet<String> = tokenize(&out.explanation.text).collect();
    let d0: BTreeSet<String> = tokenize(&inst.d0_text).collect();
    let d1: BTreeSet<String> = tokenize(&inst.d1_text).collect();
    assert!(d0.is_subset(&exp));
    let d1_only: Vec<_> =
        d1.difference(&d0).filter(|t| !tokenize(&out.proposal.selected.text).any(|p| &p == *t)).collect();
    assert!(d1_only.iter().all(|t| !exp.contains(*t)), "{d1_only:?}");
}

#[test]
fn score_and_similarity_directions() {
    let s = full_summary();
    let mean = |c: &str| s.condition(c).unwrap().mean_score;
    let (c0, c1, c2, c3) = (mean("Cond0"), mean("Cond1"), mean("Cond2"), mean("Cond3"));
    assert!(c1 < c0 && c0 <= c3 && c3 <= c2, "{c1} {c0} {c3} {c2}");
    assert!(c0 - c1 >= 0.2 && c2 - c0 >= 0.2);

    let diff = |c: &str| {
        let x = s.condition(c).unwrap();
        x.mean_sim_exp_d0 - x.mean_sim_exp_d1
    };
    assert!(diff("Cond1") > 0.05);
    assert!(-diff("Cond2") > 0.05);
    assert!(diff("Cond0").abs() < 0.1);
    for c in &s.conditions {
        assert_eq!(c.histogram.total(), 1000);
    }
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let corpus = &fixture_corpus()[..200];
    let write = || {
        let dir = tempfile::tempdir().unwrap();
        let out = run_conditions(corpus, &conditions(), &StubLlm::new(), &PromptTemplates::default(), 7);
        write_reports(dir.path(), &out).unwrap();
        ["records.csv", "summary.json", "summary.md", "failures.json"]
            .map(|f| std::fs::read(dir.path().join(f)).unwrap())
    };
    assert_eq!(write(), write());
}

#[test]
fn mock_bench_over_sample() {
    let spec = QuestionnaireSpec::default_spec();
    let profiles = sample_profiles(&spec, 42).unwrap();
    let rows = bench_attestation(&MockBackend::default(), &spec, &profiles, 1, "ci", 0).unwrap();
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().all(|r| r.verify_s < 0.01));
    let md = BenchSummary::from_records(&rows).to_markdown();
    assert!(md.contains("Proof Generation Time") && md.contains("Verification Time") && md.contains("N/A"));
}
