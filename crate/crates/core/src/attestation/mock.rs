//! Transparent stand-in for a zkVM. Anyone can forge these proofs; they
//! exercise the protocol and tamper detection, not soundness.

use subtle::ConstantTimeEq;

use super::{
    encode_journal, journal_for, Attestation, AttestationBackend, AttestationError, AttestationProof, BackendId,
    ProgramId,
};
use crate::digest::{sha256_parts, Digest32};
use crate::inference::{AnswerProfile, QuestionnaireSpec, RECORD_SEPARATOR};

const DOMAIN_TAG: &[u8] = b"MOCK1";

/// `SHA-256("MOCK1" 0x1E program_digest 0x1E journal_bytes)`.
pub fn mock_payload(program_digest: &Digest32, journal_bytes: &[u8]) -> Digest32 {
    sha256_parts(&[DOMAIN_TAG, &[RECORD_SEPARATOR], program_digest.as_bytes(), &[RECORD_SEPARATOR], journal_bytes])
}

#[derive(Debug, Clone)]
pub struct MockBackend {
    program: ProgramId,
}

impl MockBackend {
    pub fn new(program: ProgramId) -> Self {
        Self { program }
    }
}

impl Default for MockBackend {
    fn default() -> Self {
        Self::new(ProgramId::trait_inference())
    }
}

impl AttestationBackend for MockBackend {
    fn id(&self) -> BackendId {
        BackendId::Mock
    }

    fn program_id(&self) -> Result<ProgramId, AttestationError> {
        Ok(self.program.clone())
    }

    fn prove(
        &self,
        profile: &AnswerProfile,
        spec: &QuestionnaireSpec,
        issued_at: u64,
    ) -> Result<Attestation, AttestationError> {
        let journal = journal_for(profile, spec, issued_at)?;
        let payload = mock_payload(&self.program.digest, &encode_journal(&journal));
        Ok(Attestation {
            journal,
            proof: AttestationProof {
                backend_id: BackendId::Mock,
                program_digest: self.program.digest,
                payload: payload.0.to_vec(),
            },
        })
    }

    fn check_proof(&self, journal_bytes: &[u8], proof: &AttestationProof) -> bool {
        let expected = mock_payload(&proof.program_digest, journal_bytes);
        proof.payload.len() == expected.0.len() && bool::from(expected.0.ct_eq(proof.payload.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attestation::{verify, verify_encoded, VerificationOutcome};
    use crate::inference::RiskCategory;

    fn setup() -> (MockBackend, QuestionnaireSpec, ProgramId) {
        (MockBackend::default(), QuestionnaireSpec::default_spec(), ProgramId::trait_inference())
    }

    #[test]
    fn payload_is_a_digest() {
        let (backend, spec, _) = setup();
        let att = backend.prove(&AnswerProfile::new([0; 10]).unwrap(), &spec, 0).unwrap();
        assert_eq!(att.proof.payload.len(), 32);
    }

    #[test]
    fn conservative_profile_round_trip() {
        let (backend, spec, pinned) = setup();
        let att = backend.prove(&AnswerProfile::new([0; 10]).unwrap(), &spec, 42).unwrap();
        assert_eq!(att.journal.category, RiskCategory::Conservative);
        assert_eq!(verify(&backend, &att.journal, &att.proof, &pinned), VerificationOutcome::Valid);
    }

    #[test]
    fn proving_is_deterministic() {
        let (backend, spec, _) = setup();
        let p = AnswerProfile::new([2, 1, 0, 2, 1, 0, 2, 1, 0, 2]).unwrap();
        assert_eq!(backend.prove(&p, &spec, 9).unwrap(), backend.prove(&p, &spec, 9).unwrap());
    }

    #[test]
    fn program_digest_separates_payloads() {
        let journal = b"{}";
        assert_ne!(mock_payload(&Digest32([1; 32]), journal), mock_payload(&Digest32([2; 32]), journal));
    }

    #[test]
    fn tampered_journal_is_invalid() {
        let (backend, spec, pinned) = setup();
        let att = backend.prove(&AnswerProfile::new([1; 10]).unwrap(), &spec, 7).unwrap();
        let mut tampered = att.journal.clone();
        tampered.category = RiskCategory::Aggressive;
        assert_eq!(verify(&backend, &tampered, &att.proof, &pinned), VerificationOutcome::InvalidProof);
    }

    #[test]
    fn other_program_pin_is_a_mismatch() {
        let (backend, spec, _) = setup();
        let att = backend.prove(&AnswerProfile::new([1; 10]).unwrap(), &spec, 7).unwrap();
        let other = ProgramId { digest: Digest32([9; 32]), version: "other/1".into() };
        assert_eq!(verify(&backend, &att.journal, &att.proof, &other), VerificationOutcome::ProgramMismatch);
    }

    #[test]
    fn forged_payload_over_garbage_is_malformed() {
        let (backend, _, pinned) = setup();
        let garbage = b"not a journal";
        let proof = AttestationProof {
            backend_id: BackendId::Mock,
            program_digest: pinned.digest,
            payload: mock_payload(&pinned.digest, garbage).0.to_vec(),
        };
        assert_eq!(verify_encoded(&backend, garbage, &proof, &pinned), VerificationOutcome::MalformedJournal);
    }

    #[test]
    fn truncated_payload_is_invalid() {
        let (backend, spec, pinned) = setup();
        let mut att = backend.prove(&AnswerProfile::new([1; 10]).unwrap(), &spec, 7).unwrap();
        att.proof.payload.truncate(31);
        assert_eq!(verify(&backend, &att.journal, &att.proof, &pinned), VerificationOutcome::InvalidProof);
        att.proof.payload.clear();
        assert_eq!(verify(&backend, &att.journal, &att.proof, &pinned), VerificationOutcome::InvalidProof);
    }
}
