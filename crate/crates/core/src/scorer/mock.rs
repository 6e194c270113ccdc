use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::Scorer;
use crate::error::{Error, Result};
use crate::model::{Example, JudgmentIndex, Passage};

/// Deterministic test double behaviours.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum MockMode {
    /// Pseudo-random score from a hash of (seed, example, passage).
    #[default]
    Hash,
    /// The gold label.
    Oracle,
    /// The gold label, flipped with probability `epsilon`.
    NoisyOracle(f64),
    /// The same score for every passage.
    Constant(f64),
}

/// Uniform value in [0, 1) derived from the arguments with SHA-256.
pub fn unit_hash(tag: &str, seed: u64, example_id: &str, passage_id: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(tag.as_bytes());
    h.update([0]);
    h.update(seed.to_le_bytes());
    h.update(example_id.as_bytes());
    h.update([0]);
    h.update(passage_id.as_bytes());
    let digest = h.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    (u64::from_le_bytes(word) >> 11) as f64 / (1u64 << 53) as f64
}

pub struct MockScorer {
    name: String,
    seed: u64,
    mode: MockMode,
    judgments: Option<Arc<JudgmentIndex>>,
}

impl MockScorer {
    pub fn new(
        name: impl Into<String>,
        seed: u64,
        mode: MockMode,
        judgments: Option<Arc<JudgmentIndex>>,
    ) -> Result<Self> {
        match mode {
            MockMode::Oracle | MockMode::NoisyOracle(_) if judgments.is_none() => {
                return Err(Error::Config("oracle mock scorer requires judgments".into()))
            }
            MockMode::NoisyOracle(eps) if !(0.0..=1.0).contains(&eps) => {
                return Err(Error::Config(format!("noise rate {eps} outside [0, 1]")))
            }
            MockMode::Constant(v) if !(0.0..=1.0).contains(&v) => {
                return Err(Error::Config(format!("constant score {v} outside [0, 1]")))
            }
            _ => {}
        }
        Ok(MockScorer {
            name: name.into(),
            seed,
            mode,
            judgments,
        })
    }

    pub fn oracle(judgments: Arc<JudgmentIndex>) -> Self {
        MockScorer::new("oracle", 0, MockMode::Oracle, Some(judgments)).expect("valid oracle")
    }

    pub fn noisy_oracle(judgments: Arc<JudgmentIndex>, epsilon: f64, seed: u64) -> Result<Self> {
        MockScorer::new("noisy-oracle", seed, MockMode::NoisyOracle(epsilon), Some(judgments))
    }

    pub fn constant(value: f64) -> Result<Self> {
        MockScorer::new("constant", 0, MockMode::Constant(value), None)
    }

    fn gold(&self, e: &Example, p: &Passage) -> Result<bool> {
        self.judgments
            .as_ref()
            .and_then(|j| j.label(&e.example_id, &p.passage_id))
            .ok_or_else(|| {
                Error::Config(format!(
                    "oracle mock scorer has no judgment for ({}, {})",
                    e.example_id, p.passage_id
                ))
            })
    }
}

/// Score for one pair under `mode`, without the scorer wrapper.
pub fn mock_score(
    e: &Example,
    p: &Passage,
    seed: u64,
    mode: MockMode,
    judgments: Option<&JudgmentIndex>,
) -> Result<f64> {
    let gold = || {
        judgments
            .and_then(|j| j.label(&e.example_id, &p.passage_id))
            .ok_or_else(|| Error::Config("oracle mode without a judgment for this pair".into()))
    };
    Ok(match mode {
        MockMode::Hash => unit_hash("score", seed, &e.example_id, &p.passage_id),
        MockMode::Constant(v) => v,
        MockMode::Oracle => f64::from(u8::from(gold()?)),
        MockMode::NoisyOracle(eps) => {
            let flip = unit_hash("flip", seed, &e.example_id, &p.passage_id) < eps;
            f64::from(u8::from(gold()? != flip))
        }
    })
}

impl Scorer for MockScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, e: &Example, p: &Passage) -> Result<f64> {
        if matches!(self.mode, MockMode::Oracle | MockMode::NoisyOracle(_)) {
            self.gold(e, p)?;
        }
        mock_score(e, p, self.seed, self.mode, self.judgments.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AnswerType, LanguageCode};

    fn pair() -> (Example, Passage) {
        let l = LanguageCode::new("fi").unwrap();
        let p = Passage::new("p1", "teksti", l.clone(), 1).unwrap();
        let e = Example {
            example_id: "e1".into(),
            query: "q".into(),
            query_language: l,
            answer: "a".into(),
            gold_answers: vec![],
            answer_type: AnswerType::ShortSpan,
            passages: vec![p.clone()],
            original: None,
        };
        (e, p)
    }

    fn index(label: bool) -> Arc<JudgmentIndex> {
        let mut j = JudgmentIndex::default();
        j.insert("e1", "p1", label);
        Arc::new(j)
    }

    #[test]
    fn oracle_returns_gold() {
        let (e, p) = pair();
        assert_eq!(MockScorer::oracle(index(true)).score(&e, &p).unwrap(), 1.0);
        assert_eq!(MockScorer::oracle(index(false)).score(&e, &p).unwrap(), 0.0);
    }

    #[test]
    fn hash_is_deterministic_and_in_range() {
        let (e, p) = pair();
        let s = MockScorer::new("m", 9, MockMode::Hash, None).unwrap();
        let a = s.score(&e, &p).unwrap();
        assert_eq!(a, s.score(&e, &p).unwrap());
        assert!((0.0..1.0).contains(&a));
        let other = MockScorer::new("m", 10, MockMode::Hash, None).unwrap();
        assert_ne!(a, other.score(&e, &p).unwrap());
    }

    #[test]
    fn zero_noise_is_oracle() {
        let (e, p) = pair();
        for seed in 0..50 {
            let s = MockScorer::noisy_oracle(index(true), 0.0, seed).unwrap();
            assert_eq!(s.score(&e, &p).unwrap(), 1.0);
        }
        let always = MockScorer::noisy_oracle(index(true), 1.0, 4).unwrap();
        assert_eq!(always.score(&e, &p).unwrap(), 0.0);
    }

    #[test]
    fn oracle_without_judgments_fails() {
        assert!(matches!(
            MockScorer::new("o", 0, MockMode::Oracle, None),
            Err(Error::Config(_))
        ));
        let (e, p) = pair();
        assert!(mock_score(&e, &p, 0, MockMode::Oracle, None).is_err());
    }
}
