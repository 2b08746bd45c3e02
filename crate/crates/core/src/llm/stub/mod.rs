//! Deterministic offline provider.
//!
//! Output is a pure function of the request texts and seed. Proposal answers
//! are drawn from a fixed score distribution selected by the net emphasis of
//! the context marker (`d1 - d0`); explanations restate the proposal and the
//! context material they were given. The stub assumes the proposal prompt
//! lists options from most positive (index 1) to most negative.

mod dataset;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::markers::{self, Stage};
use super::{ChatRequest, ChatResponse, LlmClient, LlmError};
use crate::digest::sha256_parts;

pub use dataset::{stub_instance, CONCEPTS_PER_DOMAIN, DOMAINS};

pub const STUB_PROVIDER_ID: &str = "stub";

/// Weights over scores [-2, -1, 0, +1, +2], indexed by net emphasis + 2.
const SCORE_WEIGHTS: [[u32; 5]; 5] = [
    [30, 35, 20, 10, 5], // d0 strong
    [15, 30, 30, 20, 5],
    [5, 10, 25, 40, 20], // baseline, skewed toward +1
    [0, 5, 20, 45, 30],  // d1 moderate
    [0, 0, 0, 35, 65],   // d1 strong
];

const CLOSINGS: [&str; 4] = [
    "This option fits the situation as described.",
    "Taken together, this is the most suitable choice here.",
    "On balance, this course of action is recommended.",
    "This recommendation follows from the considerations above.",
];

#[derive(Debug, Clone, Default)]
pub struct StubLlm {
    _private: (),
}

impl StubLlm {
    pub fn new() -> Self {
        Self::default()
    }

    /// Score weights the stub uses for a given net emphasis in `-2..=2`.
    pub fn score_weights(net_emphasis: i32) -> [u32; 5] {
        SCORE_WEIGHTS[(net_emphasis.clamp(-2, 2) + 2) as usize]
    }

    fn rng_for(request: &ChatRequest) -> ChaCha8Rng {
        let seed = request.seed.unwrap_or(0).to_le_bytes();
        let digest =
            sha256_parts(&[&seed, &[0x1E], request.system_text.as_bytes(), &[0x1E], request.user_text.as_bytes()]);
        let mut key = [0u8; 32];
        key.copy_from_slice(digest.as_bytes());
        ChaCha8Rng::from_seed(key)
    }

    fn propose(request: &ChatRequest, rng: &mut ChaCha8Rng) -> String {
        let net =
            markers::parse_context(&request.system_text).map(|m| m.d1.rank() as i32 - m.d0.rank() as i32).unwrap_or(0);
        let weights = Self::score_weights(net);
        let dist = WeightedIndex::new(weights).expect("weights have positive mass");
        let score = dist.sample(rng) as i32 - 2;
        let option_count = count_option_lines(&request.user_text).max(1) as i32;
        let index = (3 - score).clamp(1, option_count);
        index.to_string()
    }

    fn explain(request: &ChatRequest, rng: &mut ChaCha8Rng) -> String {
        let proposal = markers::parse_proposal(&request.system_text).unwrap_or("the proposed option");
        let proposal = proposal.trim_end_matches('.');
        let context = markers::strip(&request.system_text)
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        let closing = CLOSINGS[rng.gen_range(0..CLOSINGS.len())];
        if context.is_empty() {
            format!("The recommended action is: {proposal}. {closing}")
        } else {
            format!("The recommended action is: {proposal}. {context} {closing}")
        }
    }
}

fn count_option_lines(text: &str) -> usize {
    text.lines()
        .filter(|line| {
            let line = line.trim_start();
            let digits = line.bytes().take_while(u8::is_ascii_digit).count();
            digits > 0 && line[digits..].starts_with(". ")
        })
        .count()
}

impl LlmClient for StubLlm {
    fn provider_id(&self) -> &str {
        STUB_PROVIDER_ID
    }

    fn chat(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let mut rng = Self::rng_for(request);
        let text = match markers::parse_stage(&request.system_text) {
            Some(Stage::Proposal) => Self::propose(request, &mut rng),
            Some(Stage::Explanation) => Self::explain(request, &mut rng),
            Some(Stage::Dataset) => match markers::parse_dataset(&request.system_text) {
                Some(m) => stub_instance(&m.domain, m.concept)
                    .map(|inst| serde_json::to_string(&inst).expect("instance serializes"))
                    .unwrap_or_else(|| "{}".to_string()),
                None => "{}".to_string(),
            },
            None => "Acknowledged.".to_string(),
        };
        Ok(ChatResponse { text, provider_id: STUB_PROVIDER_ID.to_string(), latency_ms: 0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::markers::{context_line, proposal_line, stage_line, ContextMarker};
    use crate::prompt::EmphasisLevel;

    fn proposal_request(d0: EmphasisLevel, d1: EmphasisLevel, seed: u64) -> ChatRequest {
        let ctx = ContextMarker { id: "cx".into(), d0, d1 };
        ChatRequest::new(
            format!("{}\n{}\nYou are an advisor.", stage_line(Stage::Proposal), context_line(&ctx)),
            "Question?\n1. a\n2. b\n3. c\n4. d\n5. e\nAnswer with the number.",
        )
        .with_seed(Some(seed))
    }

    #[test]
    fn fixed_seed_is_repeatable() {
        let stub = StubLlm::new();
        let req = proposal_request(EmphasisLevel::None, EmphasisLevel::None, 7);
        let first = stub.chat(&req).unwrap().text;
        for _ in 0..100 {
            assert_eq!(stub.chat(&req).unwrap().text, first);
        }
    }

    #[test]
    fn strong_verified_emphasis_picks_top_two() {
        let stub = StubLlm::new();
        for seed in 0..200 {
            let text = stub.chat(&proposal_request(EmphasisLevel::None, EmphasisLevel::Strong, seed)).unwrap().text;
            assert!(text == "1" || text == "2", "seed {seed}: {text}");
        }
    }

    #[test]
    fn baseline_mode_is_plus_one() {
        let stub = StubLlm::new();
        let mut counts = [0u32; 6];
        for seed in 0..500 {
            let text = stub.chat(&proposal_request(EmphasisLevel::None, EmphasisLevel::None, seed)).unwrap().text;
            counts[text.parse::<usize>().unwrap()] += 1;
        }
        let mode = (1..=5).max_by_key(|&i| counts[i]).unwrap();
        assert_eq!(mode, 2, "index 2 is the +1 option; counts {counts:?}");
    }

    #[test]
    fn weights_have_expected_means() {
        let mean = |w: [u32; 5]| {
            let total: u32 = w.iter().sum();
            w.iter().enumerate().map(|(i, &x)| (i as f64 - 2.0) * x as f64).sum::<f64>() / total as f64
        };
        let means: Vec<f64> = (-2..=2).map(|n| mean(StubLlm::score_weights(n))).collect();
        assert!(means.windows(2).all(|w| w[0] < w[1]), "{means:?}");
    }

    #[test]
    fn explanation_restates_proposal_and_context() {
        let stub = StubLlm::new();
        let ctx = ContextMarker { id: "c1".into(), d0: EmphasisLevel::Strong, d1: EmphasisLevel::None };
        let req = ChatRequest::new(
            format!(
                "{}\n{}\n{}\nTraits: prefers caution",
                stage_line(Stage::Explanation),
                context_line(&ctx),
                proposal_line("Rest and hydrate.")
            ),
            "Explain.",
        );
        let text = stub.chat(&req).unwrap().text;
        assert!(text.contains("Rest and hydrate"));
        assert!(text.contains("prefers caution"));
        assert!(!text.contains("zkadvice"));
    }

    #[test]
    fn rejects_invalid_requests() {
        let stub = StubLlm::new();
        assert!(matches!(stub.chat(&ChatRequest::new("", "x")), Err(LlmError::InvalidRequest(_))));
    }

    #[test]
    fn counts_numbered_option_lines() {
        assert_eq!(count_option_lines("1. a\n 2. b\n3.c\n10. d\nx. e"), 3);
    }
}
