//! Attested risk-tolerance inference and trait-aware LLM advice.
//!
//! A prover runs a fixed questionnaire classifier and publishes only the
//! resulting category together with a proof. An advisor verifies that proof
//! against a pinned program, then prompts a language model with the verified
//! category and any free-text traits the user supplied.

pub mod advisor;
pub mod attestation;
pub mod canonical;
pub mod digest;
pub mod embed;
pub mod eval;
pub mod inference;
pub mod llm;
pub mod prompt;
