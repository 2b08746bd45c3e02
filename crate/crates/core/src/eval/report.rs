use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{score_distribution, EvalRecord, RunOutput};
use super::EvalError;

/// Counts of proposal scores, index 0 is score -2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreHistogram {
    pub counts: [u64; 5],
}

impl ScoreHistogram {
    /// `None` for an empty slice.
    pub fn from_scores(scores: &[i8]) -> Option<Self> {
        if scores.is_empty() {
            return None;
        }
        let mut counts = [0u64; 5];
        for &s in scores {
            counts[(s.clamp(-2, 2) + 2) as usize] += 1;
        }
        Some(Self { counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, score: i8) -> u64 {
        self.counts[(score.clamp(-2, 2) + 2) as usize]
    }

    pub fn mean(&self) -> f64 {
        let weighted: i64 = self.counts.iter().enumerate().map(|(i, &c)| (i as i64 - 2) * c as i64).sum();
        weighted as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: String,
    pub c_prop: String,
    pub c_exp: String,
    pub records: u64,
    pub histogram: ScoreHistogram,
    pub mean_score: f64,
    pub mean_sim_exp_d0: f64,
    pub mean_sim_exp_d1: f64,
    pub mean_sim_exp_prop: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub conditions: Vec<ConditionSummary>,
    pub total_records: u64,
    pub total_failures: u64,
}

impl EvalSummary {
    pub fn from_output(output: &RunOutput) -> Result<Self, EvalError> {
        let mut names: Vec<&str> = Vec::new();
        for r in &output.records {
            if !names.contains(&r.condition.as_str()) {
                names.push(&r.condition);
            }
        }
        let conditions =
            names.into_iter().map(|name| summarize(&output.records, name)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            conditions,
            total_records: output.records.len() as u64,
            total_failures: output.failures.len() as u64,
        })
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionSummary> {
        self.conditions.iter().find(|c| c.condition == name)
    }

    pub fn to_markdown(&self) -> String {
        let mut md = String::from("# Evaluation summary\n\n## Explanation similarity\n\n");
        md.push_str("| Condition | c_prop | c_exp | Sim(A_exp, d0) | Sim(A_exp, d1) | Sim(A_exp, A_prop) |\n");
        md.push_str("|---|---|---|---|---|---|\n");
        for c in &self.conditions {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.3} | {:.3} | {:.3} |",
                c.condition, c.c_prop, c.c_exp, c.mean_sim_exp_d0, c.mean_sim_exp_d1, c.mean_sim_exp_prop
            );
        }
        md.push_str("\n## Proposal score distribution\n\n");
        md.push_str("| Condition | c_prop | -2 | -1 | 0 | +1 | +2 | Mean |\n");
        md.push_str("|---|---|---|---|---|---|---|---|\n");
        for c in &self.conditions {
            let h = &c.histogram.counts;
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {} | {} | {} | {:.3} |",
                c.condition, c.c_prop, h[0], h[1], h[2], h[3], h[4], c.mean_score
            );
        }
        let _ = write!(md, "\nRecords: {}. Failures: {}.\n", self.total_records, self.total_failures);
        md
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn summarize(records: &[EvalRecord], name: &str) -> Result<ConditionSummary, EvalError> {
    let histogram = score_distribution(records, name)?;
    let selected: Vec<&EvalRecord> = records.iter().filter(|r| r.condition == name).collect();
    let n = selected.len() as f64;
    let mean = |f: fn(&EvalRecord) -> f64| round6(selected.iter().map(|r| f(r)).sum::<f64>() / n);
    Ok(ConditionSummary {
        condition: name.to_string(),
        c_prop: selected[0].c_prop.clone(),
        c_exp: selected[0].c_exp.clone(),
        records: histogram.total(),
        mean_score: round6(histogram.mean()),
        histogram,
        mean_sim_exp_d0: mean(|r| r.sim_exp_d0),
        mean_sim_exp_d1: mean(|r| r.sim_exp_d1),
        mean_sim_exp_prop: mean(|r| r.sim_exp_prop),
    })
}

fn records_csv(records: &[EvalRecord]) -> Result<Vec<u8>, EvalError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| EvalError::Io(e.into());
    w.write_record([
        "instance_id",
        "condition",
        "c_prop",
        "c_exp",
        "prop_score",
        "prop_text",
        "sim_exp_d0",
        "sim_exp_d1",
        "sim_exp_prop",
        "exp_text",
    ])
    .map_err(io)?;
    for r in records {
        w.write_record([
            r.instance_id.as_str(),
            &r.condition,
            &r.c_prop,
            &r.c_exp,
            &r.prop_score.to_string(),
            &r.prop_text,
            &format!("{:.6}", r.sim_exp_d0),
            &format!("{:.6}", r.sim_exp_d1),
            &format!("{:.6}", r.sim_exp_prop),
            &r.exp_text,
        ])
        .map_err(io)?;
    }
    w.into_inner().map_err(|e| EvalError::Io(e.into_error()))
}

/// Writes `records.csv`, `summary.json`, `summary.md` and `failures.json`.
///
/// Output depends only on the run output, so identical runs give identical files.
pub fn write_reports(dir: &Path, output: &RunOutput) -> Result<EvalSummary, EvalError> {
    let summary = EvalSummary::from_output(output)?;
    fs::create_dir_all(dir)?;
    fs::write(dir.join("records.csv"), records_csv(&output.records)?)?;
    fs::write(dir.join("summary.json"), pretty_json(&summary))?;
    fs::write(dir.join("failures.json"), pretty_json(&output.failures))?;
    fs::write(dir.join("summary.md"), summary.to_markdown())?;
    Ok(summary)
}

fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::RunFailure;

    fn record(condition: &str, score: i8, d0: f64, d1: f64) -> EvalRecord {
        EvalRecord {
            instance_id: format!("i{score}"),
            condition: condition.into(),
            c_prop: "c1".into(),
            c_exp: "c1".into(),
            prop_score: score,
            prop_text: "Take, a \"quoted\" step".into(),
            exp_text: "line one\nline two".into(),
            sim_exp_d0: d0,
            sim_exp_d1: d1,
            sim_exp_prop: 0.5,
        }
    }

    #[test]
    fn histogram_mean_and_conservation() {
        let h = ScoreHistogram::from_scores(&[2, 2, 2]).unwrap();
        assert_eq!(h.mean(), 2.0);
        let h = ScoreHistogram::from_scores(&[-2, -1, 0, 1, 2, 1]).unwrap();
        assert_eq!(h.total(), 6);
        assert_eq!(h.count(1), 2);
        assert!((h.mean() - 1.0 / 6.0).abs() < 1e-12);
        assert!(ScoreHistogram::from_scores(&[]).is_none());
    }

    #[test]
    fn summary_keeps_condition_order() {
        let output = RunOutput {
            records: vec![record("Cond1", -1, 0.6, 0.2), record("Cond0", 1, 0.4, 0.4), record("Cond1", 0, 0.4, 0.2)],
            failures: vec![],
        };
        let s = EvalSummary::from_output(&output).unwrap();
        assert_eq!(s.conditions[0].condition, "Cond1");
        let c1 = s.condition("Cond1").unwrap();
        assert_eq!(c1.records, 2);
        assert_eq!(c1.mean_score, -0.5);
        assert!((c1.mean_sim_exp_d0 - 0.5).abs() < 1e-9);
        assert!(s.to_markdown().contains("| Cond1 | c1 | c1 | 0.500 | 0.200 | 0.500 |"));
    }

    #[test]
    fn reports_are_written_and_quoted() {
        let dir = tempfile::tempdir().unwrap();
        let output = RunOutput {
            records: vec![record("Cond0", 1, 0.1, 0.2)],
            failures: vec![RunFailure {
                instance_id: "x".into(),
                condition: "Cond0".into(),
                kind: "ProposalParseFailure".into(),
                message: "no option".into(),
            }],
        };
        write_reports(dir.path(), &output).unwrap();
        let csv_text = fs::read_to_string(dir.path().join("records.csv")).unwrap();
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let row = reader.records().next().unwrap().unwrap();
        assert_eq!(&row[5], "Take, a \"quoted\" step");
        assert_eq!(&row[6], "0.100000");
        assert_eq!(&row[9], "line one\nline two");
        let failures = fs::read_to_string(dir.path().join("failures.json")).unwrap();
        assert!(failures.contains("ProposalParseFailure"));
        assert!(dir.path().join("summary.md").exists());
    }
}
