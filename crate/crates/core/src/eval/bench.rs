use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::attestation::{verify, AttestationBackend, BackendId, VerificationOutcome};
use crate::inference::{AnswerProfile, QuestionnaireSpec};

/// Backends that always get a column in the summary, measured or not.
pub const BENCH_BACKENDS: [BackendId; 2] = [BackendId::Mock, BackendId::ExternalZkvm];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub backend: BackendId,
    pub hardware: String,
    pub profile_id: u32,
    /// Mean over repetitions, seconds.
    pub proof_gen_s: f64,
    pub verify_s: f64,
}

/// Times prove and verify for each profile, one row per profile.
///
/// Every proof is checked; a proof that does not verify aborts the run.
pub fn bench_attestation(
    backend: &dyn AttestationBackend,
    spec: &QuestionnaireSpec,
    profiles: &[AnswerProfile],
    repetitions: u32,
    hardware: &str,
    issued_at: u64,
) -> Result<Vec<TimingRecord>, EvalError> {
    let pinned = backend.program_id()?;
    let reps = repetitions.max(1);
    let mut rows = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let (mut prove_total, mut verify_total) = (0.0, 0.0);
        for _ in 0..reps {
            let start = Instant::now();
            let attestation = backend.prove(profile, spec, issued_at)?;
            prove_total += start.elapsed().as_secs_f64();
            let start = Instant::now();
            let outcome = verify(backend, &attestation.journal, &attestation.proof, &pinned);
            verify_total += start.elapsed().as_secs_f64();
            if outcome != VerificationOutcome::Valid {
                return Err(EvalError::VerificationFailed(profile.index()));
            }
        }
        rows.push(TimingRecord {
            backend: backend.id(),
            hardware: hardware.to_string(),
            profile_id: profile.index(),
            proof_gen_s: prove_total / f64::from(reps),
            verify_s: verify_total / f64::from(reps),
        });
    }
    Ok(rows)
}

pub fn timing_csv(records: &[TimingRecord]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["backend", "hardware", "profile_id", "proof_gen_s", "verify_s"]).expect("in-memory write");
    for r in records {
        w.write_record([
            r.backend.as_str(),
            &r.hardware,
            &r.profile_id.to_string(),
            &format!("{:.9}", r.proof_gen_s),
            &format!("{:.9}", r.verify_s),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchColumn {
    pub backend: BackendId,
    pub hardware: Option<String>,
    /// `None` when the backend was not measured.
    pub mean_proof_gen_s: Option<f64>,
    pub mean_verify_s: Option<f64>,
    pub profiles: usize,
}

/// Mean timings per (backend, hardware) configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub columns: Vec<BenchColumn>,
}

impl BenchSummary {
    /// Backends in [`BENCH_BACKENDS`] without records get an unmeasured column.
    pub fn from_records(records: &[TimingRecord]) -> Self {
        let mut configs: Vec<(BackendId, String)> = Vec::new();
        for r in records {
            let key = (r.backend, r.hardware.clone());
            if !configs.contains(&key) {
                configs.push(key);
            }
        }
        let mut columns: Vec<BenchColumn> = configs
            .into_iter()
            .map(|(backend, hardware)| {
                let rows: Vec<&TimingRecord> =
                    records.iter().filter(|r| r.backend == backend && r.hardware == hardware).collect();
                let n = rows.len() as f64;
                BenchColumn {
                    backend,
                    mean_proof_gen_s: Some(rows.iter().map(|r| r.proof_gen_s).sum::<f64>() / n),
                    mean_verify_s: Some(rows.iter().map(|r| r.verify_s).sum::<f64>() / n),
                    profiles: rows.len(),
                    hardware: Some(hardware),
                }
            })
            .collect();
        for backend in BENCH_BACKENDS {
            if !columns.iter().any(|c| c.backend == backend) {
                columns.push(BenchColumn {
                    backend,
                    hardware: None,
                    mean_proof_gen_s: None,
                    mean_verify_s: None,
                    profiles: 0,
                });
            }
        }
        columns.sort_by_key(|c| BENCH_BACKENDS.iter().position(|b| *b == c.backend));
        Self { columns }
    }

    pub fn to_markdown(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "N/A".to_string(), |s| format!("{s:.6} s"));
        let mut md = String::from("|  |");
        for c in &self.columns {
            match &c.hardware {
                Some(hw) => {
                    let _ = write!(md, " {} ({hw}) |", c.backend);
                }
                None => {
                    let _ = write!(md, " {} |", c.backend);
                }
            }
        }
        md.push_str("\n|---|");
        md.push_str(&"---|".repeat(self.columns.len()));
        md.push('\n');
        md.push_str("| Proof Generation Time |");
        for c in &self.columns {
            let _ = write!(md, " {} |", cell(c.mean_proof_gen_s));
        }
        md.push_str("\n| Verification Time |");
        for c in &self.columns {
            let _ = write!(md, " {} |", cell(c.mean_verify_s));
        }
        md.push('\n');
        md
    }
}
