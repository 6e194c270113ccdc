//! Majority-vote aggregation of rater records and agreement statistics.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    AttributionJudgment, Example, LanguageCode, PairKey, RatingRecord, Scenario,
};

/// Aggregates the records of a single (example, passage, scenario) triple.
///
/// Flagged and uninterpretable records are dropped. With fewer than two valid
/// records left the triple is excluded (`None`); otherwise the label is 1 iff
/// at least two raters said the answer is attributed.
pub fn aggregate_ratings(ratings: &[RatingRecord]) -> Result<Option<AttributionJudgment>> {
    let Some(first) = ratings.first() else {
        return Ok(None);
    };
    for r in &ratings[1..] {
        if r.scenario != first.scenario {
            return Err(Error::invalid("scenario", "mixed scenarios in one aggregation group"));
        }
        if r.example_id != first.example_id || r.passage_id != first.passage_id {
            return Err(Error::invalid(
                "passage_id",
                "records for different (example, passage) pairs in one aggregation group",
            ));
        }
    }
    let votes: Vec<bool> = ratings.iter().filter_map(RatingRecord::vote).collect();
    if votes.len() < 2 {
        return Ok(None);
    }
    let yes_votes = votes.iter().filter(|v| **v).count() as u32;
    Ok(Some(AttributionJudgment {
        example_id: first.example_id.clone(),
        passage_id: first.passage_id.clone(),
        scenario: first.scenario,
        label: yes_votes >= 2,
        yes_votes,
        valid_rating_count: votes.len() as u32,
    }))
}

/// Result of aggregating a whole ratings file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Aggregation {
    /// Sorted by (scenario, example_id, passage_id).
    pub judgments: Vec<AttributionJudgment>,
    pub excluded: Vec<(Scenario, PairKey)>,
}

pub fn aggregate_all(ratings: &[RatingRecord]) -> Result<Aggregation> {
    let mut groups: BTreeMap<(Scenario, PairKey), Vec<RatingRecord>> = BTreeMap::new();
    for r in ratings {
        groups
            .entry((r.scenario, r.pair_key()))
            .or_default()
            .push(r.clone());
    }
    let mut out = Aggregation::default();
    for (key, group) in groups {
        match aggregate_ratings(&group)? {
            Some(j) => out.judgments.push(j),
            None => out.excluded.push(key),
        }
    }
    Ok(out)
}

fn percentage(hits: usize, total: usize, what: &str) -> Result<f64> {
    if total == 0 {
        return Err(Error::UndefinedMetric(format!("{what}: empty population")));
    }
    Ok(100.0 * hits as f64 / total as f64)
}

/// Share of individual valid ratings that agree with the aggregated label.
///
/// Only pairs with a judgment in `judgments` (same scenario) contribute;
/// excluded triples are left out of both numerator and denominator.
pub fn agreement_with_consensus(
    judgments: &[AttributionJudgment],
    ratings: &[RatingRecord],
) -> Result<f64> {
    let (agree, total) = agreement_counts(judgments, ratings, |_| true);
    percentage(agree, total, "agreement with consensus")
}

fn agreement_counts(
    judgments: &[AttributionJudgment],
    ratings: &[RatingRecord],
    keep: impl Fn(&RatingRecord) -> bool,
) -> (usize, usize) {
    let labels: HashMap<(Scenario, &str, &str), bool> = judgments
        .iter()
        .map(|j| ((j.scenario, j.example_id.as_str(), j.passage_id.as_str()), j.label))
        .collect();
    let mut agree = 0;
    let mut total = 0;
    for r in ratings.iter().filter(|r| keep(r)) {
        let Some(vote) = r.vote() else { continue };
        let Some(&label) = labels.get(&(r.scenario, r.example_id.as_str(), r.passage_id.as_str()))
        else {
            continue;
        };
        total += 1;
        agree += usize::from(vote == label);
    }
    (agree, total)
}

/// Agreement with consensus per query language for one scenario.
/// Languages with no judged ratings map to `None`.
pub fn agreement_by_language(
    examples: &[Example],
    judgments: &[AttributionJudgment],
    ratings: &[RatingRecord],
    scenario: Scenario,
) -> BTreeMap<LanguageCode, Option<f64>> {
    let lang_of: HashMap<&str, &LanguageCode> = examples
        .iter()
        .map(|e| (e.example_id.as_str(), e.source_language()))
        .collect();
    let langs: std::collections::BTreeSet<&LanguageCode> = lang_of.values().copied().collect();
    langs
        .into_iter()
        .map(|lang| {
            let (agree, total) = agreement_counts(judgments, ratings, |r| {
                r.scenario == scenario && lang_of.get(r.example_id.as_str()) == Some(&lang)
            });
            (lang.clone(), percentage(agree, total, "agreement").ok())
        })
        .collect()
}

/// Percentage of shared (example, passage) keys whose labels differ between
/// the two scenarios. `restrict_to`, when given, further limits the keys.
pub fn scenario_disagreement(
    s1: &[AttributionJudgment],
    s2: &[AttributionJudgment],
    restrict_to: Option<&HashSet<PairKey>>,
) -> Result<f64> {
    let s2_labels: HashMap<PairKey, bool> = s2.iter().map(|j| (j.pair_key(), j.label)).collect();
    let mut differ = 0;
    let mut shared = 0;
    for j in s1 {
        let key = j.pair_key();
        if restrict_to.is_some_and(|keys| !keys.contains(&key)) {
            continue;
        }
        if let Some(&other) = s2_labels.get(&key) {
            shared += 1;
            differ += usize::from(other != j.label);
        }
    }
    percentage(differ, shared, "scenario disagreement")
}

/// Pairs whose in-language text was machine translated from English: English
/// passages retrieved for a non-English query.
pub fn translated_from_english(examples: &[Example]) -> HashSet<PairKey> {
    examples
        .iter()
        .filter(|e| !e.source_language().is_english())
        .flat_map(|e| {
            e.passages
                .iter()
                .filter(|p| p.source_language().is_english())
                .map(|p| PairKey::new(&e.example_id, &p.passage_id))
        })
        .collect()
}

/// Collection size per language: distinct queries and judged triples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionCounts {
    pub unique_queries: usize,
    pub triples: usize,
}

pub fn collection_counts(
    examples: &[Example],
    judgments: &[AttributionJudgment],
    scenario: Scenario,
) -> BTreeMap<LanguageCode, CollectionCounts> {
    let by_id: HashMap<&str, &Example> =
        examples.iter().map(|e| (e.example_id.as_str(), e)).collect();
    let mut queries: BTreeMap<LanguageCode, HashSet<&str>> = BTreeMap::new();
    let mut triples: BTreeMap<LanguageCode, usize> = BTreeMap::new();
    for j in judgments.iter().filter(|j| j.scenario == scenario) {
        let Some(e) = by_id.get(j.example_id.as_str()) else { continue };
        let lang = e.source_language().clone();
        queries.entry(lang.clone()).or_default().insert(e.query.as_str());
        *triples.entry(lang).or_default() += 1;
    }
    triples
        .into_iter()
        .map(|(lang, n)| {
            let unique_queries = queries.get(&lang).map_or(0, HashSet::len);
            (lang, CollectionCounts { unique_queries, triples: n })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Clone, Copy, Debug)]
    enum Vote {
        Yes,
        No,
        Flag,
    }

    fn record(rater: usize, vote: Vote) -> RatingRecord {
        RatingRecord {
            example_id: "e".into(),
            passage_id: "p".into(),
            rater_id: format!("r{rater}"),
            scenario: Scenario::InLanguage,
            interpretable: Some(true),
            attributed: match vote {
                Vote::Yes => Some(true),
                Vote::No => Some(false),
                Vote::Flag => None,
            },
            flagged: matches!(vote, Vote::Flag),
        }
    }

    fn run(votes: &[Vote]) -> Option<(bool, u32)> {
        let rs: Vec<_> = votes.iter().enumerate().map(|(i, v)| record(i, *v)).collect();
        aggregate_ratings(&rs).unwrap().map(|j| (j.label, j.yes_votes))
    }

    #[test]
    fn majority_examples() {
        use Vote::*;
        assert_eq!(run(&[Yes, Yes, No]), Some((true, 2)));
        assert_eq!(run(&[Flag, Flag, Yes]), None);
        assert_eq!(run(&[Yes, No, No]), Some((false, 1)));
        assert_eq!(run(&[Yes, Flag, No]), Some((false, 1)));
        assert_eq!(run(&[Yes, Flag, Yes]), Some((true, 2)));
    }

    #[test]
    fn uninterpretable_dropped() {
        let mut rs = vec![record(0, Vote::Yes), record(1, Vote::Yes), record(2, Vote::No)];
        rs[1].interpretable = Some(false);
        rs[1].attributed = None;
        let j = aggregate_ratings(&rs).unwrap().unwrap();
        assert_eq!((j.label, j.valid_rating_count), (false, 2));
    }

    #[test]
    fn mixed_scenarios_fatal() {
        let mut rs = vec![record(0, Vote::Yes), record(1, Vote::Yes)];
        rs[1].scenario = Scenario::InEnglish;
        assert!(aggregate_ratings(&rs).is_err());
    }

    #[test]
    fn agreement_single_triple() {
        use Vote::*;
        let rs: Vec<_> = [Yes, Yes, No].iter().enumerate().map(|(i, v)| record(i, *v)).collect();
        let j = aggregate_ratings(&rs).unwrap().unwrap();
        let a = agreement_with_consensus(&[j], &rs).unwrap();
        assert!((a - 200.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn agreement_unanimous_and_empty() {
        use Vote::*;
        let rs: Vec<_> = [No, No, No].iter().enumerate().map(|(i, v)| record(i, *v)).collect();
        let j = aggregate_ratings(&rs).unwrap().unwrap();
        assert_eq!(agreement_with_consensus(&[j], &rs).unwrap(), 100.0);
        assert!(matches!(
            agreement_with_consensus(&[], &rs),
            Err(Error::UndefinedMetric(_))
        ));
    }

    fn judgment(p: usize, scenario: Scenario, label: bool) -> AttributionJudgment {
        AttributionJudgment {
            example_id: "e".into(),
            passage_id: format!("p{p}"),
            scenario,
            label,
            yes_votes: if label { 3 } else { 0 },
            valid_rating_count: 3,
        }
    }

    #[test]
    fn disagreement_counts_shared_keys() {
        let s1: Vec<_> = (0..10).map(|p| judgment(p, Scenario::InLanguage, true)).collect();
        let mut s2: Vec<_> = (0..10).map(|p| judgment(p, Scenario::InEnglish, true)).collect();
        assert_eq!(scenario_disagreement(&s1, &s2, None).unwrap(), 0.0);
        s2[3].label = false;
        s2.push(judgment(42, Scenario::InEnglish, false));
        assert_eq!(scenario_disagreement(&s1, &s2, None).unwrap(), 10.0);
        let only: HashSet<_> = [PairKey::new("e", "p3"), PairKey::new("e", "p4")].into();
        assert_eq!(scenario_disagreement(&s1, &s2, Some(&only)).unwrap(), 50.0);
        assert!(scenario_disagreement(&s1, &[], None).is_err());
    }
}
