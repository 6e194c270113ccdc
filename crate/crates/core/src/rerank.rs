//! Pick the passage most likely to support the answer and measure the AIS gain.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::AisTally;
use crate::model::{Example, JudgmentIndex, ScoredPassage};

/// One line of the reranked output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RerankChoice {
    pub example_id: String,
    pub selected_passage_id: String,
    pub score: f64,
}

/// Highest-scoring passage; ties go to the better retrieval rank.
///
/// `scored` must cover exactly the passages of `e`.
pub fn rerank(e: &Example, scored: &[ScoredPassage]) -> Result<RerankChoice> {
    let mismatch = |message: String| Error::CoverageMismatch {
        example_id: e.example_id.clone(),
        message,
    };
    if scored.len() != e.passages.len() {
        return Err(mismatch(format!(
            "{} scores for {} passages",
            scored.len(),
            e.passages.len()
        )));
    }
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(scored.len());
    for s in scored {
        if by_id.insert(s.passage_id.as_str(), s.score).is_some() {
            return Err(mismatch(format!("passage {:?} scored twice", s.passage_id)));
        }
    }
    let mut best: Option<(&str, f64)> = None;
    // passages are in rank order, so strict `>` keeps the earliest on ties
    for p in &e.passages {
        let score = *by_id
            .get(p.passage_id.as_str())
            .ok_or_else(|| mismatch(format!("passage {:?} has no score", p.passage_id)))?;
        if best.is_none_or(|(_, b)| score.total_cmp(&b).is_gt()) {
            best = Some((p.passage_id.as_str(), score));
        }
    }
    let (id, score) = best.ok_or_else(|| mismatch("example has no passages".into()))?;
    Ok(RerankChoice {
        example_id: e.example_id.clone(),
        selected_passage_id: id.to_owned(),
        score,
    })
}

/// Reranks every example that has passages; fails on the first coverage error.
pub fn rerank_all(
    examples: &[Example],
    scored: &HashMap<String, Vec<ScoredPassage>>,
) -> Result<Vec<RerankChoice>> {
    examples
        .iter()
        .filter(|e| !e.passages.is_empty())
        .map(|e| rerank(e, scored.get(&e.example_id).map(Vec::as_slice).unwrap_or_default()))
        .collect()
}

/// AIS of the reranked top-1 choices. Choices without a judgment are
/// excluded and tallied; examples without passages count as unattributed.
pub fn reranked_ais_tally(
    examples: &[Example],
    judgments: &JudgmentIndex,
    scored: &HashMap<String, Vec<ScoredPassage>>,
) -> Result<AisTally> {
    let mut tally = AisTally {
        evaluated: examples.iter().filter(|e| e.passages.is_empty()).count(),
        ..Default::default()
    };
    for choice in rerank_all(examples, scored)? {
        match judgments.label(&choice.example_id, &choice.selected_passage_id) {
            Some(label) => {
                tally.evaluated += 1;
                tally.attributed += usize::from(label);
            }
            None => tally.excluded.push(choice.example_id),
        }
    }
    Ok(tally)
}

pub fn reranked_ais(
    examples: &[Example],
    judgments: &JudgmentIndex,
    scored: &HashMap<String, Vec<ScoredPassage>>,
) -> Result<f64> {
    reranked_ais_tally(examples, judgments, scored)?.percentage()
}

/// `100 * (after - before) / before`.
pub fn relative_improvement(before: f64, after: f64) -> Result<f64> {
    if before <= 0.0 {
        return Err(Error::UndefinedMetric(format!(
            "relative improvement from a baseline of {before}"
        )));
    }
    Ok(100.0 * (after - before) / before)
}

/// Arithmetic mean of per-language relative improvements.
pub fn mean_relative_improvement(values: &[f64]) -> Result<f64> {
    mean(values).ok_or_else(|| Error::UndefinedMetric("mean of zero improvements".into()))
}

pub(crate) fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Groups score records by example, validating each score.
pub fn group_scores<'a>(
    records: impl IntoIterator<Item = &'a crate::scorer::ScoreRecord>,
) -> Result<HashMap<String, Vec<ScoredPassage>>> {
    let mut out: HashMap<String, Vec<ScoredPassage>> = HashMap::new();
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert((r.example_id.as_str(), r.passage_id.as_str())) {
            return Err(Error::CoverageMismatch {
                example_id: r.example_id.clone(),
                message: format!("duplicate score for passage {:?}", r.passage_id),
            });
        }
        out.entry(r.example_id.clone())
            .or_default()
            .push(ScoredPassage::new(&r.passage_id, r.score, &r.scorer)?);
    }
    Ok(out)
}
