//! Hashed bag-of-words embedding and cosine similarity.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const EMBEDDING_DIM: usize = 256;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmbedError {
    #[error("cannot embed text without any tokens")]
    EmptyText,
}

/// L2-normalized vector of [`EMBEDDING_DIM`] components. Never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Normalizes raw components; `None` for a zero vector or wrong length.
    pub fn from_raw(raw: Vec<f64>) -> Option<Self> {
        if raw.len() != EMBEDDING_DIM || raw.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return None;
        }
        Some(Self(raw.into_iter().map(|x| x / norm).collect()))
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }
}

/// FNV-1a, 64-bit.
fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase)
}

pub fn embed(text: &str) -> Result<EmbeddingVector, EmbedError> {
    let mut counts = vec![0.0f64; EMBEDDING_DIM];
    let mut any = false;
    for token in tokenize(text) {
        counts[(fnv1a64(token.as_bytes()) % EMBEDDING_DIM as u64) as usize] += 1.0;
        any = true;
    }
    if !any {
        return Err(EmbedError::EmptyText);
    }
    Ok(EmbeddingVector::from_raw(counts).expect("non-empty counts have positive norm"))
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    let dot: f64 = a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum();
    dot.clamp(-1.0, 1.0)
}

/// Embeds both texts and compares them.
pub fn text_similarity(a: &str, b: &str) -> Result<f64, EmbedError> {
    Ok(cosine_similarity(&embed(a)?, &embed(b)?))
}
