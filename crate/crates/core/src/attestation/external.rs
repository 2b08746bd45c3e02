//! Subprocess adapter for an external zkVM toolchain (RiscZero, SP1, ...).
//!
//! Prove invocation:
//! `<prove_cmd> --program-image IMG --spec SPEC --issued-at T --proof-out OUT <input.json>`
//! with the journal JSON expected on stdout and proof bytes written to `OUT`.
//!
//! Verify invocation:
//! `<verify_cmd> --program-image IMG --program-digest HEX --journal J --proof P`,
//! exit status 0 meaning the proof checks out.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{
    decode_journal, journal_for, Attestation, AttestationBackend, AttestationError, AttestationProof, BackendId,
    ProgramId,
};
use crate::canonical::to_canonical_bytes;
use crate::digest::sha256;
use crate::inference::{AnswerProfile, QuestionnaireSpec, PROGRAM_VERSION};

const DIAGNOSTIC_LIMIT: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalConfig {
    pub prove_cmd: String,
    pub verify_cmd: String,
    pub program_image: PathBuf,
    #[serde(default)]
    pub parallel_jobs: bool,
}

impl ExternalConfig {
    pub fn from_json(raw: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(raw)
    }
}

pub struct ExternalBackend {
    config: ExternalConfig,
    // one subprocess at a time unless parallel_jobs is set
    gate: Mutex<()>,
}

impl ExternalBackend {
    pub fn new(config: ExternalConfig) -> Self {
        Self { config, gate: Mutex::new(()) }
    }

    pub fn config(&self) -> &ExternalConfig {
        &self.config
    }

    fn command(&self, cmd: &str) -> Result<Command, AttestationError> {
        let mut parts = cmd.split_whitespace();
        let program = parts.next().ok_or_else(|| AttestationError::BackendUnavailable("empty command".into()))?;
        let resolved = resolve_executable(program)
            .ok_or_else(|| AttestationError::BackendUnavailable(format!("command not found: {program}")))?;
        if !self.config.program_image.is_file() {
            return Err(AttestationError::BackendUnavailable(format!(
                "program image not found: {}",
                self.config.program_image.display()
            )));
        }
        let mut command = Command::new(resolved);
        command.args(parts).arg("--program-image").arg(&self.config.program_image);
        Ok(command)
    }

    fn run(&self, mut command: Command) -> std::io::Result<Output> {
        let _guard =
            if self.config.parallel_jobs { None } else { Some(self.gate.lock().unwrap_or_else(|e| e.into_inner())) };
        command.output()
    }
}

fn resolve_executable(program: &str) -> Option<PathBuf> {
    let path = Path::new(program);
    if program.contains('/') {
        return path.is_file().then(|| path.to_path_buf());
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths).map(|dir| dir.join(program)).find(|candidate| candidate.is_file())
    })
}

fn diagnostics(output: &Output) -> String {
    let mut text = String::from_utf8_lossy(&output.stderr).into_owned();
    if text.len() > DIAGNOSTIC_LIMIT {
        let mut cut = DIAGNOSTIC_LIMIT;
        while !text.is_char_boundary(cut) {
            cut -= 1;
        }
        text.truncate(cut);
    }
    format!("exit status {}: {}", output.status, text.trim())
}

impl AttestationBackend for ExternalBackend {
    fn id(&self) -> BackendId {
        BackendId::ExternalZkvm
    }

    fn program_id(&self) -> Result<ProgramId, AttestationError> {
        let image = fs::read(&self.config.program_image).map_err(|e| {
            AttestationError::BackendUnavailable(format!(
                "cannot read program image {}: {e}",
                self.config.program_image.display()
            ))
        })?;
        Ok(ProgramId { digest: sha256(&image), version: PROGRAM_VERSION.to_string() })
    }

    fn prove(
        &self,
        profile: &AnswerProfile,
        spec: &QuestionnaireSpec,
        issued_at: u64,
    ) -> Result<Attestation, AttestationError> {
        let mut command = self.command(&self.config.prove_cmd)?;
        let program = self.program_id()?;
        let io = |e: std::io::Error| AttestationError::ExternalProverFailure(e.to_string());

        let dir = tempfile::tempdir().map_err(io)?;
        let input_path = dir.path().join("input.json");
        let spec_path = dir.path().join("spec.json");
        let proof_path = dir.path().join("proof.bin");
        fs::write(&input_path, profile.to_json()).map_err(io)?;
        fs::write(&spec_path, serde_json::to_vec(spec).expect("spec serializes")).map_err(io)?;

        command
            .arg("--spec")
            .arg(&spec_path)
            .arg("--issued-at")
            .arg(issued_at.to_string())
            .arg("--proof-out")
            .arg(&proof_path)
            .arg(&input_path);
        let output = self.run(command).map_err(io)?;
        if !output.status.success() {
            return Err(AttestationError::ExternalProverFailure(diagnostics(&output)));
        }

        let journal = serde_json::from_slice::<serde_json::Value>(&output.stdout)
            .ok()
            .and_then(|v| to_canonical_bytes(&v).ok())
            .and_then(|bytes| decode_journal(&bytes))
            .ok_or_else(|| AttestationError::ExternalProverFailure("prover did not print a valid journal".into()))?;
        let expected = journal_for(profile, spec, issued_at).map_err(AttestationError::from)?;
        if journal != expected {
            return Err(AttestationError::ExternalProverFailure(
                "prover journal differs from the local inference".into(),
            ));
        }
        let payload = fs::read(&proof_path).map_err(io)?;
        if payload.is_empty() {
            return Err(AttestationError::ExternalProverFailure("prover wrote an empty proof".into()));
        }
        Ok(Attestation {
            journal,
            proof: AttestationProof { backend_id: BackendId::ExternalZkvm, program_digest: program.digest, payload },
        })
    }

    fn check_proof(&self, journal_bytes: &[u8], proof: &AttestationProof) -> bool {
        let Ok(mut command) = self.command(&self.config.verify_cmd) else {
            return false;
        };
        let Ok(dir) = tempfile::tempdir() else {
            return false;
        };
        let journal_path = dir.path().join("journal.json");
        let proof_path = dir.path().join("proof.bin");
        if fs::write(&journal_path, journal_bytes).is_err() || fs::write(&proof_path, &proof.payload).is_err() {
            return false;
        }
        command
            .arg("--program-digest")
            .arg(proof.program_digest.to_hex())
            .arg("--journal")
            .arg(&journal_path)
            .arg("--proof")
            .arg(&proof_path);
        matches!(self.run(command), Ok(output) if output.status.success())
    }
}
