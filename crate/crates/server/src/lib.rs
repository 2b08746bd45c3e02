//! HTTP services and the `zkadvice` command line.
//!
//! [`prover`] serves questionnaire inference with attestation; [`advisor`]
//! verifies attestations and returns advice. The two are meant to run as
//! separate processes operated by different parties.

pub mod advisor;
pub mod api;
pub mod cli;
pub mod config;
pub mod prover;
