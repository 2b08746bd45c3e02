use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EvalError;
use crate::inference::{
    classify, enumerate_category_counts, score, AnswerProfile, QuestionnaireSpec, RiskCategory, PROFILE_SPACE,
};

pub const PROFILES_PER_CATEGORY: usize = 10;

/// Stratified rejection sample of 40 distinct profiles, 10 per category.
///
/// Profiles are drawn uniformly from the full answer space and kept while
/// their category stratum still has room. Output is ordered by category,
/// then by profile index.
pub fn sample_profiles(spec: &QuestionnaireSpec, seed: u64) -> Result<Vec<AnswerProfile>, EvalError> {
    let counts = enumerate_category_counts(spec)?;
    if let Some((&category, _)) = counts.iter().find(|(_, &n)| (n as usize) < PROFILES_PER_CATEGORY) {
        return Err(EvalError::StratumExhausted(category));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: BTreeMap<RiskCategory, BTreeSet<u32>> = BTreeMap::new();
    let target = PROFILES_PER_CATEGORY * RiskCategory::ALL.len();
    let mut taken = 0;
    while taken < target {
        let index = rng.gen_range(0..PROFILE_SPACE);
        let profile = AnswerProfile::from_index(index).expect("index within space");
        let category = classify(score(&profile, spec))?;
        let stratum = strata.entry(category).or_default();
        if stratum.len() < PROFILES_PER_CATEGORY && stratum.insert(index) {
            taken += 1;
        }
    }
    Ok(strata.into_values().flatten().map(|i| AnswerProfile::from_index(i).expect("index within space")).collect())
}
