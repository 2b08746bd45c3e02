//! Rule-based risk-tolerance inference over a ten-question questionnaire.
//!
//! This is the computation whose execution gets attested: parse the private
//! answers, bind the public questionnaire through a digest, score, classify.
//! Everything here is pure and deterministic.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{sha256_parts, Digest32};

pub const QUESTION_COUNT: usize = 10;
pub const OPTION_COUNT: usize = 3;
/// 3^10 possible answer profiles.
pub const PROFILE_SPACE: u32 = 59_049;
pub const MAX_SCORE: u32 = 20;

/// Version string of the inference program; bound into every digest.
pub const PROGRAM_VERSION: &str = concat!("risk-trait-inference/", env!("CARGO_PKG_VERSION"));

pub(crate) const UNIT_SEPARATOR: u8 = 0x1F;
pub(crate) const RECORD_SEPARATOR: u8 = 0x1E;

const DEFAULT_SPEC_JSON: &str = include_str!("../data/questionnaire.json");

/// Inclusive score bands, in category order.
const SCORE_BANDS: [(u32, u32, RiskCategory); 4] = [
    (0, 5, RiskCategory::Conservative),
    (6, 10, RiskCategory::SteadyGrowth),
    (11, 15, RiskCategory::Balanced),
    (16, 20, RiskCategory::Aggressive),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InferenceError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    // The offending value is deliberately not echoed: it is private data.
    #[error("answer at position {position} is outside 0..=2")]
    OutOfRangeAnswer { position: usize },
    #[error("expected {QUESTION_COUNT} answers, found {found}")]
    WrongAnswerCount { found: usize },
    #[error("total score {0} is outside 0..={MAX_SCORE}")]
    ScoreOutOfRange(u32),
    #[error("invalid questionnaire spec: {0}")]
    InvalidSpec(String),
}

impl InferenceError {
    /// Stable machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            InferenceError::MalformedInput(_) => "MalformedInput",
            InferenceError::OutOfRangeAnswer { .. } => "OutOfRangeAnswer",
            InferenceError::WrongAnswerCount { .. } => "WrongAnswerCount",
            InferenceError::ScoreOutOfRange(_) => "ScoreOutOfRange",
            InferenceError::InvalidSpec(_) => "InvalidSpec",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskCategory {
    Conservative = 0,
    SteadyGrowth = 1,
    Balanced = 2,
    Aggressive = 3,
}

impl RiskCategory {
    pub const ALL: [RiskCategory; 4] =
        [RiskCategory::Conservative, RiskCategory::SteadyGrowth, RiskCategory::Balanced, RiskCategory::Aggressive];

    pub fn ordinal(self) -> u8 {
        self as u8
    }

    pub fn label(self) -> &'static str {
        match self {
            RiskCategory::Conservative => "Conservative",
            RiskCategory::SteadyGrowth => "Steady Growth",
            RiskCategory::Balanced => "Balanced",
            RiskCategory::Aggressive => "Aggressive Investment",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RiskCategory::Conservative => "conservative",
            RiskCategory::SteadyGrowth => "steady_growth",
            RiskCategory::Balanced => "balanced",
            RiskCategory::Aggressive => "aggressive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.as_str() == s)
    }
}

impl fmt::Display for RiskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Question {
    pub id: u32,
    pub text: String,
    pub options: [String; OPTION_COUNT],
    pub option_points: [u32; OPTION_COUNT],
}

/// The public questionnaire definition. Only constructible in a valid state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct QuestionnaireSpec {
    version: String,
    questions: Vec<Question>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    version: String,
    questions: Vec<Question>,
}

impl TryFrom<RawSpec> for QuestionnaireSpec {
    type Error = InferenceError;

    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        QuestionnaireSpec::new(raw.version, raw.questions)
    }
}

impl QuestionnaireSpec {
    pub fn new(version: impl Into<String>, questions: Vec<Question>) -> Result<Self, InferenceError> {
        let version = version.into();
        let invalid = |msg: String| Err(InferenceError::InvalidSpec(msg));
        if version.is_empty() {
            return invalid("version must be non-empty".into());
        }
        if questions.len() != QUESTION_COUNT {
            return invalid(format!("expected {QUESTION_COUNT} questions, found {}", questions.len()));
        }
        for (i, q) in questions.iter().enumerate() {
            if q.id as usize != i {
                return invalid(format!("question at position {i} has id {}", q.id));
            }
            if q.text.is_empty() || q.options.iter().any(String::is_empty) {
                return invalid(format!("question {i} has empty text"));
            }
            let p = q.option_points;
            if p.iter().any(|&v| v > 2) || !(p[0] < p[1] && p[1] < p[2]) {
                return invalid(format!("question {i} option_points must be strictly increasing within 0..=2"));
            }
        }
        Ok(Self { version, questions })
    }

    /// The English fixture questionnaire shipped with the crate.
    pub fn default_spec() -> Self {
        Self::from_json(DEFAULT_SPEC_JSON.as_bytes()).expect("bundled questionnaire is valid")
    }

    pub fn from_json(raw: &[u8]) -> Result<Self, InferenceError> {
        let raw: RawSpec = serde_json::from_slice(raw).map_err(|e| InferenceError::MalformedInput(e.to_string()))?;
        raw.try_into()
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    /// Unambiguous concatenation of the questionnaire text:
    /// `version 0x1E (text 0x1F opt0 0x1F opt1 0x1F opt2 0x1E)x10`.
    pub fn canonical_question_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2048);
        out.extend_from_slice(self.version.as_bytes());
        out.push(RECORD_SEPARATOR);
        for q in &self.questions {
            out.extend_from_slice(q.text.as_bytes());
            for opt in &q.options {
                out.push(UNIT_SEPARATOR);
                out.extend_from_slice(opt.as_bytes());
            }
            out.push(RECORD_SEPARATOR);
        }
        out
    }

    /// SHA-256 of `PROGRAM_VERSION 0x1E canonical_question_bytes`.
    pub fn digest(&self) -> Digest32 {
        sha256_parts(&[PROGRAM_VERSION.as_bytes(), &[RECORD_SEPARATOR], &self.canonical_question_bytes()])
    }
}

/// A private answer vector: one option index per question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AnswerProfile([u8; QUESTION_COUNT]);

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProfile {
    answers: Vec<i64>,
}

#[derive(Serialize)]
struct ProfileDoc<'a> {
    answers: &'a [u8; QUESTION_COUNT],
}

impl AnswerProfile {
    pub fn new(answers: [u8; QUESTION_COUNT]) -> Result<Self, InferenceError> {
        if let Some(position) = answers.iter().position(|&a| a > 2) {
            return Err(InferenceError::OutOfRangeAnswer { position });
        }
        Ok(Self(answers))
    }

    pub fn answers(&self) -> &[u8; QUESTION_COUNT] {
        &self.0
    }

    /// Base-3 index in `0..PROFILE_SPACE`, first answer most significant.
    pub fn index(&self) -> u32 {
        self.0.iter().fold(0u32, |acc, &a| acc * 3 + a as u32)
    }

    pub fn from_index(mut index: u32) -> Option<Self> {
        if index >= PROFILE_SPACE {
            return None;
        }
        let mut answers = [0u8; QUESTION_COUNT];
        for slot in answers.iter_mut().rev() {
            *slot = (index % 3) as u8;
            index /= 3;
        }
        Some(Self(answers))
    }

    /// Every profile in index order.
    pub fn all() -> impl Iterator<Item = AnswerProfile> {
        (0..PROFILE_SPACE).filter_map(AnswerProfile::from_index)
    }

    /// The private input document `{"answers":[...]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ProfileDoc { answers: &self.0 }).expect("profile serializes")
    }

    /// The bare answers array as it appears inside the input document.
    pub fn answers_json(&self) -> String {
        serde_json::to_string(&self.0).expect("array serializes")
    }
}

/// Strict parse of the private input document.
pub fn parse_profile(raw: &[u8]) -> Result<AnswerProfile, InferenceError> {
    let text =
        std::str::from_utf8(raw).map_err(|_| InferenceError::MalformedInput("input is not valid UTF-8".into()))?;
    // serde error text may quote input fragments, so only its location is kept
    let doc: RawProfile = serde_json::from_str(text).map_err(|e| {
        InferenceError::MalformedInput(format!(
            "expected {{\"answers\": [10 integers]}} (line {}, column {})",
            e.line(),
            e.column()
        ))
    })?;
    if doc.answers.len() != QUESTION_COUNT {
        return Err(InferenceError::WrongAnswerCount { found: doc.answers.len() });
    }
    let mut answers = [0u8; QUESTION_COUNT];
    for (position, (&value, slot)) in doc.answers.iter().zip(answers.iter_mut()).enumerate() {
        if !(0..=2).contains(&value) {
            return Err(InferenceError::OutOfRangeAnswer { position });
        }
        *slot = value as u8;
    }
    Ok(AnswerProfile(answers))
}

pub fn score(profile: &AnswerProfile, spec: &QuestionnaireSpec) -> u32 {
    profile.answers().iter().zip(spec.questions()).map(|(&a, q)| q.option_points[a as usize]).sum()
}

pub fn classify(total_score: u32) -> Result<RiskCategory, InferenceError> {
    SCORE_BANDS
        .iter()
        .find(|(lo, hi, _)| (*lo..=*hi).contains(&total_score))
        .map(|&(_, _, c)| c)
        .ok_or(InferenceError::ScoreOutOfRange(total_score))
}

/// Inclusive score band of a category.
pub fn score_band(category: RiskCategory) -> (u32, u32) {
    let (lo, hi, _) = SCORE_BANDS[category as usize];
    (lo, hi)
}

/// Bytes identifying the inference program: its version and decision rules.
pub fn program_identity_bytes() -> Vec<u8> {
    let mut out = PROGRAM_VERSION.as_bytes().to_vec();
    for (lo, hi, c) in SCORE_BANDS {
        out.push(RECORD_SEPARATOR);
        out.extend_from_slice(format!("{lo}-{hi}:{}", c.as_str()).as_bytes());
    }
    out
}

/// Public output bundle of one inference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceResult {
    pub category: RiskCategory,
    pub total_score: u32,
    pub spec_digest: Digest32,
    pub program_version: String,
}

pub fn infer(profile: &AnswerProfile, spec: &QuestionnaireSpec) -> Result<InferenceResult, InferenceError> {
    let total_score = score(profile, spec);
    Ok(InferenceResult {
        category: classify(total_score)?,
        total_score,
        spec_digest: spec.digest(),
        program_version: PROGRAM_VERSION.to_string(),
    })
}

/// Parse then infer, as the attested program does.
pub fn infer_raw(raw: &[u8], spec: &QuestionnaireSpec) -> Result<InferenceResult, InferenceError> {
    infer(&parse_profile(raw)?, spec)
}

/// Exhaustive category counts over all 59,049 profiles.
pub fn enumerate_category_counts(spec: &QuestionnaireSpec) -> Result<BTreeMap<RiskCategory, u32>, InferenceError> {
    let mut counts: BTreeMap<RiskCategory, u32> = RiskCategory::ALL.iter().map(|&c| (c, 0)).collect();
    for profile in AnswerProfile::all() {
        *counts.entry(classify(score(&profile, spec))?).or_default() += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> QuestionnaireSpec {
        QuestionnaireSpec::default_spec()
    }

    #[test]
    fn parse_minimal_document() {
        let p = parse_profile(br#"{"answers":[0,0,0,0,0,0,0,0,0,0]}"#).unwrap();
        assert_eq!(p.answers(), &[0; 10]);
    }

    #[test]
    fn parse_rejects_wrong_count() {
        assert_eq!(parse_profile(br#"{"answers":[0,1,2]}"#), Err(InferenceError::WrongAnswerCount { found: 3 }));
    }

    #[test]
    fn parse_rejects_out_of_range() {
        assert_eq!(
            parse_profile(br#"{"answers":[0,0,0,0,0,0,0,0,0,3]}"#),
            Err(InferenceError::OutOfRangeAnswer { position: 9 })
        );
        assert_eq!(
            parse_profile(br#"{"answers":[-1,0,0,0,0,0,0,0,0,0]}"#),
            Err(InferenceError::OutOfRangeAnswer { position: 0 })
        );
    }

    #[test]
    fn parse_is_strict() {
        for raw in [
            &br#"{"answers":[0,0,0,0,0,0,0,0,0,0],"name":"x"}"#[..],
            br#"{"answers":"0000000000"}"#,
            br#"{"answers":[0,0,0,0,0,0,0,0,0,0.5]}"#,
            br#"[0,0,0,0,0,0,0,0,0,0]"#,
            b"not json",
            b"\xff\xfe",
        ] {
            assert!(matches!(parse_profile(raw), Err(InferenceError::MalformedInput(_))), "{raw:?}");
        }
    }

    #[test]
    fn error_messages_do_not_echo_input() {
        let err = parse_profile(br#"{"answers":[0,0,0,0,0,0,0,0,0,7]}"#).unwrap_err();
        assert!(!err.to_string().contains('7'));
        let err = parse_profile(br#"{"answerz":[1,2,1,2,1,2,1,2,1,2]}"#).unwrap_err();
        assert!(!err.to_string().contains("answerz"));
    }

    #[test]
    fn score_extremes_and_mixed() {
        let s = spec();
        assert_eq!(score(&AnswerProfile::new([0; 10]).unwrap(), &s), 0);
        assert_eq!(score(&AnswerProfile::new([2; 10]).unwrap(), &s), 20);
        let mixed = AnswerProfile::new([2, 2, 2, 2, 0, 0, 0, 0, 1, 1]).unwrap();
        assert_eq!(score(&mixed, &s), 10);
    }

    #[test]
    fn classify_boundaries() {
        use RiskCategory::*;
        let expected = [
            (0, Conservative),
            (5, Conservative),
            (6, SteadyGrowth),
            (10, SteadyGrowth),
            (11, Balanced),
            (15, Balanced),
            (16, Aggressive),
            (20, Aggressive),
        ];
        for (s, c) in expected {
            assert_eq!(classify(s), Ok(c), "score {s}");
        }
        assert_eq!(classify(21), Err(InferenceError::ScoreOutOfRange(21)));
    }

    #[test]
    fn infer_extremes() {
        let s = spec();
        let low = infer(&AnswerProfile::new([0; 10]).unwrap(), &s).unwrap();
        assert_eq!((low.category, low.total_score), (RiskCategory::Conservative, 0));
        assert_eq!(low.spec_digest, s.digest());
        let high = infer(&AnswerProfile::new([2; 10]).unwrap(), &s).unwrap();
        assert_eq!((high.category, high.total_score), (RiskCategory::Aggressive, 20));
        assert_eq!(high.program_version, PROGRAM_VERSION);
    }

    #[test]
    fn canonical_bytes_depend_on_option_order() {
        let s = spec();
        let mut qs = s.questions().to_vec();
        qs[3].options.swap(0, 1);
        let swapped = QuestionnaireSpec::new(s.version(), qs).unwrap();
        assert_ne!(s.canonical_question_bytes(), swapped.canonical_question_bytes());
        assert_eq!(s.canonical_question_bytes(), spec().canonical_question_bytes());
    }

    #[test]
    fn separators_prevent_split_ambiguity() {
        let s = spec();
        let mut a = s.questions().to_vec();
        let mut b = s.questions().to_vec();
        a[0].text = "ab".into();
        a[0].options[0] = "c".into();
        b[0].text = "a".into();
        b[0].options[0] = "bc".into();
        let a = QuestionnaireSpec::new("v", a).unwrap();
        let b = QuestionnaireSpec::new("v", b).unwrap();
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn one_character_change_alters_digest() {
        let s = spec();
        let mut qs = s.questions().to_vec();
        qs[5].options[2].push('.');
        let changed = QuestionnaireSpec::new(s.version(), qs).unwrap();
        assert_ne!(s.digest(), changed.digest());
    }

    #[test]
    fn spec_validation() {
        let s = spec();
        let mut flat = s.questions().to_vec();
        flat[0].option_points = [1, 1, 1];
        assert!(matches!(QuestionnaireSpec::new("v", flat), Err(InferenceError::InvalidSpec(_))));

        let mut short = s.questions().to_vec();
        short.pop();
        assert!(QuestionnaireSpec::new("v", short).is_err());

        let mut misnumbered = s.questions().to_vec();
        misnumbered.swap(1, 2);
        assert!(QuestionnaireSpec::new("v", misnumbered).is_err());

        let mut empty = s.questions().to_vec();
        empty[9].options[1].clear();
        assert!(QuestionnaireSpec::new("v", empty).is_err());

        assert!(QuestionnaireSpec::new("", s.questions().to_vec()).is_err());
    }

    #[test]
    fn spec_json_validation_goes_through_constructor() {
        let mut doc: serde_json::Value = serde_json::from_str(DEFAULT_SPEC_JSON).unwrap();
        doc["questions"][4]["option_points"] = serde_json::json!([2, 2, 2]);
        let err = QuestionnaireSpec::from_json(doc.to_string().as_bytes()).unwrap_err();
        assert_eq!(err.kind(), "InvalidSpec");

        let mut doc: serde_json::Value = serde_json::from_str(DEFAULT_SPEC_JSON).unwrap();
        doc["extra"] = serde_json::json!(1);
        assert_eq!(QuestionnaireSpec::from_json(doc.to_string().as_bytes()).unwrap_err().kind(), "MalformedInput");
    }

    #[test]
    fn index_round_trip_covers_domain() {
        assert_eq!(AnswerProfile::from_index(0).unwrap().answers(), &[0; 10]);
        assert_eq!(AnswerProfile::from_index(PROFILE_SPACE - 1).unwrap().answers(), &[2; 10]);
        assert!(AnswerProfile::from_index(PROFILE_SPACE).is_none());
        assert_eq!(AnswerProfile::from_index(5).unwrap().answers(), &[0, 0, 0, 0, 0, 0, 0, 0, 1, 2]);
        assert_eq!(AnswerProfile::all().count() as u32, PROFILE_SPACE);
    }

    #[test]
    fn profile_json_shape() {
        let p = AnswerProfile::new([0, 1, 2, 0, 1, 2, 0, 1, 2, 0]).unwrap();
        assert_eq!(p.to_json(), r#"{"answers":[0,1,2,0,1,2,0,1,2,0]}"#);
        assert_eq!(p.answers_json(), "[0,1,2,0,1,2,0,1,2,0]");
    }
}
