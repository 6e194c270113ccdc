//! Scalar metrics: exact match, AIS and its breakdowns, ROC-AUC, accuracy
//! and decision-threshold calibration.
//!
//! Percentages are on a 0–100 scale. Metrics with an empty population are
//! reported as [`Error::UndefinedMetric`], never as 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Example, JudgmentIndex, LanguageCode, LanguageDistribution, Passage};
use crate::scorer::normalize;

/// Which candidate passages an AIS computation may use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetFilter {
    #[default]
    Any,
    /// Passages in the query language.
    InLanguage,
    /// English passages, and the answer must not be attributed to any
    /// in-language passage.
    EnglishExclusive,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Top1,
    #[default]
    All,
}

/// Meaning of "top-1" under a subset filter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Top1Mode {
    /// Highest-ranked passage among those the filter keeps.
    #[default]
    WithinSubset,
    /// The overall rank-1 passage, counted only if the filter keeps it.
    Overall,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AisOptions {
    pub pool: Pool,
    pub subset: SubsetFilter,
    pub top1_mode: Top1Mode,
}

impl AisOptions {
    pub fn new(pool: Pool, subset: SubsetFilter) -> Self {
        AisOptions {
            pool,
            subset,
            top1_mode: Top1Mode::WithinSubset,
        }
    }
}

/// 1 iff the normalized answer equals some normalized gold answer.
pub fn exact_match(answer: &str, gold_answers: &[String]) -> Result<bool> {
    if gold_answers.is_empty() {
        return Err(Error::UndefinedMetric("exact match needs at least one gold answer".into()));
    }
    let a = normalize(answer);
    Ok(gold_answers.iter().any(|g| normalize(g) == a))
}

/// EM per example; `None` where the example has no gold answers.
pub fn exact_match_bits(examples: &[Example]) -> Vec<Option<bool>> {
    examples
        .iter()
        .map(|e| exact_match(&e.answer, &e.gold_answers).ok())
        .collect()
}

/// Counts behind an AIS percentage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AisTally {
    pub attributed: usize,
    pub evaluated: usize,
    /// Examples skipped because a needed judgment was missing.
    pub excluded: Vec<String>,
}

impl AisTally {
    pub fn percentage(&self) -> Result<f64> {
        if self.evaluated == 0 {
            return Err(Error::UndefinedMetric("AIS over zero examples".into()));
        }
        Ok(100.0 * self.attributed as f64 / self.evaluated as f64)
    }

    fn add(&mut self, e: &Example, outcome: Option<bool>) {
        match outcome {
            Some(hit) => {
                self.evaluated += 1;
                self.attributed += usize::from(hit);
            }
            None => self.excluded.push(e.example_id.clone()),
        }
    }
}

fn in_subset(e: &Example, p: &Passage, subset: SubsetFilter) -> bool {
    match subset {
        SubsetFilter::Any => true,
        SubsetFilter::InLanguage => p.source_language() == e.source_language(),
        SubsetFilter::EnglishExclusive => p.source_language().is_english(),
    }
}

/// Whether `e` counts as attributed under `opts`; `None` if a judgment the
/// decision depends on is missing.
pub fn example_attributed(e: &Example, judgments: &JudgmentIndex, opts: AisOptions) -> Option<bool> {
    let label = |p: &Passage| judgments.label(&e.example_id, &p.passage_id);
    let mut candidates = e.passages.iter().filter(|p| in_subset(e, p, opts.subset));
    let mut hit = match (opts.pool, opts.top1_mode) {
        (Pool::Top1, Top1Mode::WithinSubset) => match candidates.next() {
            Some(p) => label(p)?,
            None => false,
        },
        (Pool::Top1, Top1Mode::Overall) => match e.passages.first() {
            Some(p) if in_subset(e, p, opts.subset) => label(p)?,
            _ => false,
        },
        (Pool::All, _) => {
            let mut any = false;
            for p in candidates {
                any |= label(p)?;
            }
            any
        }
    };
    if opts.subset == SubsetFilter::EnglishExclusive {
        for p in e.passages.iter().filter(|p| in_subset(e, p, SubsetFilter::InLanguage)) {
            if label(p)? {
                hit = false;
            }
        }
    }
    Some(hit)
}

pub fn ais_tally<'a>(
    examples: impl IntoIterator<Item = &'a Example>,
    judgments: &JudgmentIndex,
    opts: AisOptions,
) -> AisTally {
    let mut tally = AisTally::default();
    for e in examples {
        tally.add(e, example_attributed(e, judgments, opts));
    }
    tally
}

/// Percentage of answers attributed to the pooled, subset-filtered passages.
pub fn ais(examples: &[Example], judgments: &JudgmentIndex, pool: Pool, subset: SubsetFilter) -> Result<f64> {
    ais_tally(examples, judgments, AisOptions::new(pool, subset)).percentage()
}

/// AIS within the EM=1 and EM=0 strata. Empty strata are `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EmBreakdown {
    pub of_em: Option<f64>,
    pub non_em: Option<f64>,
}

pub fn ais_breakdown_by_em(
    examples: &[Example],
    judgments: &JudgmentIndex,
    em_bits: &[bool],
    opts: AisOptions,
) -> Result<EmBreakdown> {
    if examples.len() != em_bits.len() {
        return Err(Error::LengthMismatch {
            left: examples.len(),
            right: em_bits.len(),
        });
    }
    let stratum = |want: bool| {
        let members = examples.iter().zip(em_bits).filter(|(_, em)| **em == want).map(|(e, _)| e);
        ais_tally(members, judgments, opts).percentage().ok()
    };
    Ok(EmBreakdown {
        of_em: stratum(true),
        non_em: stratum(false),
    })
}

fn check_pairs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::invalid("scores", format!("{bad} is not a number")));
    }
    let pos = labels.iter().filter(|l| **l).count();
    Ok((pos, labels.len() - pos))
}

fn require_both_classes(pos: usize, neg: usize, what: &str) -> Result<()> {
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!("{what} needs both classes present")));
    }
    Ok(())
}

/// Area under the ROC curve via the Mann–Whitney rank statistic, with tied
/// scores sharing their average rank. O(n log n).
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    let (pos, neg) = check_pairs(scores, labels)?;
    require_both_classes(pos, neg, "ROC-AUC")?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their mean
        let mean_rank = (i + j + 2) as f64 / 2.0;
        let tied_pos = order[i..=j].iter().filter(|&&k| labels[k]).count();
        pos_rank_sum += mean_rank * tied_pos as f64;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

/// Percentage of labels equal to the prediction `score >= threshold`.
pub fn accuracy_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<f64> {
    check_pairs(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::UndefinedMetric("accuracy over zero items".into()));
    }
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(s, l)| (**s >= threshold) == **l)
        .count();
    Ok(100.0 * correct as f64 / scores.len() as f64)
}

/// Thresholds considered by [`calibrate_threshold`], ascending: one below the
/// minimum score, midpoints between adjacent distinct scores, one above the
/// maximum.
pub fn candidate_thresholds(scores: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = scores.iter().copied().filter(|s| !s.is_nan()).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let (Some(&lo), Some(&hi)) = (distinct.first(), distinct.last()) else {
        return Vec::new();
    };
    let mut out = Vec::with_capacity(distinct.len() + 1);
    out.push(lo - 1.0);
    out.extend(distinct.windows(2).map(|w| w[0] + (w[1] - w[0]) / 2.0));
    out.push(hi + 1.0);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub accuracy: f64,
}

/// Threshold maximizing accuracy over [`candidate_thresholds`]; ties go to
/// the smallest threshold.
pub fn calibrate_threshold(scores: &[f64], labels: &[bool]) -> Result<Calibration> {
    let (pos, neg) = check_pairs(scores, labels)?;
    require_both_classes(pos, neg, "threshold calibration")?;
    let mut pos_scores: Vec<f64> = scores.iter().zip(labels).filter(|(_, l)| **l).map(|(s, _)| *s).collect();
    let mut neg_scores: Vec<f64> = scores.iter().zip(labels).filter(|(_, l)| !**l).map(|(s, _)| *s).collect();
    pos_scores.sort_by(f64::total_cmp);
    neg_scores.sort_by(f64::total_cmp);
    let below = |sorted: &[f64], t: f64| sorted.partition_point(|s| *s < t);
    let mut best: Option<(f64, usize)> = None;
    for t in candidate_thresholds(scores) {
        let correct = (pos - below(&pos_scores, t)) + below(&neg_scores, t);
        if best.is_none_or(|(_, c)| correct > c) {
            best = Some((t, correct));
        }
    }
    let (threshold, correct) = best.expect("non-empty input has candidates");
    Ok(Calibration {
        threshold,
        accuracy: 100.0 * correct as f64 / scores.len() as f64,
    })
}

/// Among EM=0 items with gold label 1, the percentage scored at or above
/// `threshold`.
pub fn non_em_detection_rate(scores: &[f64], labels: &[bool], em_bits: &[bool], threshold: f64) -> Result<f64> {
    check_pairs(scores, labels)?;
    if em_bits.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: em_bits.len(),
            right: labels.len(),
        });
    }
    let stratum: Vec<f64> = scores
        .iter()
        .zip(labels)
        .zip(em_bits)
        .filter(|((_, l), em)| **l && !**em)
        .map(|((s, _), _)| *s)
        .collect();
    if stratum.is_empty() {
        return Err(Error::UndefinedMetric("no attributed non-EM items".into()));
    }
    let hits = stratum.iter().filter(|s| **s >= threshold).count();
    Ok(100.0 * hits as f64 / stratum.len() as f64)
}

/// Per query language, the share of pooled passages in that language, in
/// English, or in any other language. For English queries, English
/// passages count as in-language.
pub fn passage_language_distribution(examples: &[Example]) -> BTreeMap<LanguageCode, LanguageDistribution> {
    let mut counts: BTreeMap<LanguageCode, [usize; 3]> = BTreeMap::new();
    for e in examples {
        let q = e.source_language();
        let c = counts.entry(q.clone()).or_default();
        for p in &e.passages {
            let pl = p.source_language();
            let slot = if pl == q {
                0
            } else if pl.is_english() {
                1
            } else {
                2
            };
            c[slot] += 1;
        }
    }
    counts
        .into_iter()
        .filter(|(_, c)| c.iter().sum::<usize>() > 0)
        .map(|(lang, c)| {
            let total = c.iter().sum::<usize>() as f64;
            let pct = |k: usize| 100.0 * k as f64 / total;
            (
                lang,
                LanguageDistribution {
                    in_lang: pct(c[0]),
                    en: pct(c[1]),
                    other: pct(c[2]),
                },
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AnswerType;

    fn l(s: &str) -> LanguageCode {
        LanguageCode::new(s).unwrap()
    }

    /// Example whose passages are given as (language, label) in rank order.
    fn ex(id: &str, qlang: &str, passages: &[(&str, bool)], judgments: &mut JudgmentIndex) -> Example {
        let passages = passages
            .iter()
            .enumerate()
            .map(|(i, (pl, lab))| {
                let pid = format!("{id}-p{}", i + 1);
                judgments.insert(id, &pid, *lab);
                Passage::new(pid, "text", l(pl), i as u32 + 1).unwrap()
            })
            .collect();
        Example {
            example_id: id.into(),
            query: "q".into(),
            query_language: l(qlang),
            answer: "a".into(),
            gold_answers: vec!["a".into()],
            answer_type: AnswerType::ShortSpan,
            passages,
            original: None,
        }
    }

    #[test]
    fn exact_match_examples() {
        assert!(exact_match("Nairobi", &["Nairobi".into()]).unwrap());
        assert!(!exact_match("the skin", &["the liver".into()]).unwrap());
        assert!(!exact_match("Six crores", &["70-85 millions".into()]).unwrap());
        assert!(exact_match(" NAIROBI", &["x".into(), "nairobi ".into()]).unwrap());
        assert!(matches!(exact_match("a", &[]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn all_attributed_is_100() {
        let mut j = JudgmentIndex::default();
        let es = vec![ex("e1", "ja", &[("ja", true), ("en", true)], &mut j)];
        assert_eq!(ais(&es, &j, Pool::Top1, SubsetFilter::Any).unwrap(), 100.0);
        assert_eq!(ais(&es, &j, Pool::All, SubsetFilter::Any).unwrap(), 100.0);
    }

    #[test]
    fn english_exclusive_needs_no_in_language_support() {
        let mut j = JudgmentIndex::default();
        let both = vec![ex("e1", "bn", &[("bn", true), ("en", true)], &mut j)];
        assert_eq!(ais(&both, &j, Pool::All, SubsetFilter::EnglishExclusive).unwrap(), 0.0);
        assert_eq!(ais(&both, &j, Pool::All, SubsetFilter::InLanguage).unwrap(), 100.0);
        let only_en = vec![ex("e2", "bn", &[("bn", false), ("en", true)], &mut j)];
        assert_eq!(ais(&only_en, &j, Pool::All, SubsetFilter::EnglishExclusive).unwrap(), 100.0);
        assert_eq!(ais(&only_en, &j, Pool::Top1, SubsetFilter::EnglishExclusive).unwrap(), 100.0);
        assert_eq!(ais(&only_en, &j, Pool::Top1, SubsetFilter::Any).unwrap(), 0.0);
    }

    #[test]
    fn top1_modes_differ_under_subset() {
        let mut j = JudgmentIndex::default();
        let es = vec![ex("e1", "fi", &[("en", false), ("fi", true)], &mut j)];
        let within = AisOptions::new(Pool::Top1, SubsetFilter::InLanguage);
        let overall = AisOptions { top1_mode: Top1Mode::Overall, ..within };
        assert_eq!(ais_tally(&es, &j, within).percentage().unwrap(), 100.0);
        assert_eq!(ais_tally(&es, &j, overall).percentage().unwrap(), 0.0);
    }

    #[test]
    fn missing_judgment_excludes_example() {
        let mut j = JudgmentIndex::default();
        let mut es = vec![ex("e1", "ru", &[("ru", true)], &mut j), ex("e2", "ru", &[("ru", true)], &mut j)];
        es[1].passages.push(Passage::new("unjudged", "t", l("ru"), 2).unwrap());
        let t = ais_tally(&es, &j, AisOptions::new(Pool::All, SubsetFilter::Any));
        assert_eq!((t.attributed, t.evaluated), (1, 1));
        assert_eq!(t.excluded, ["e2"]);
        // top-1 does not need the unjudged rank-2 passage
        let t = ais_tally(&es, &j, AisOptions::new(Pool::Top1, SubsetFilter::Any));
        assert_eq!((t.evaluated, t.excluded.len()), (2, 0));
    }

    #[test]
    fn em_strata() {
        let mut j = JudgmentIndex::default();
        let es = vec![
            ex("e1", "te", &[("te", true)], &mut j),
            ex("e2", "te", &[("te", false)], &mut j),
        ];
        let opts = AisOptions::new(Pool::All, SubsetFilter::Any);
        let b = ais_breakdown_by_em(&es, &j, &[true, true], opts).unwrap();
        assert_eq!(b.of_em, Some(50.0));
        assert_eq!(b.non_em, None);
        let b = ais_breakdown_by_em(&es, &j, &[true, false], opts).unwrap();
        assert_eq!((b.of_em, b.non_em), (Some(100.0), Some(0.0)));
        assert!(ais_breakdown_by_em(&es, &j, &[true], opts).is_err());
    }

    #[test]
    fn auc_edges() {
        let labels = [false, false, true, true];
        assert_eq!(roc_auc(&[0.0, 0.0, 1.0, 1.0], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.3; 4], &labels).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.9, 0.8, 0.1, 0.2], &labels).unwrap(), 0.0);
        assert!(matches!(roc_auc(&[0.1, 0.2], &[true, true]), Err(Error::UndefinedMetric(_))));
        assert!(roc_auc(&[0.1], &[true, false]).is_err());
    }

    #[test]
    fn calibration_separable() {
        let c = calibrate_threshold(&[0.1, 0.4, 0.6, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(c.threshold, 0.5);
        assert_eq!(c.accuracy, 100.0);
    }

    #[test]
    fn calibration_flipped_labels_picks_low_sentinel() {
        let scores = [0.1, 0.4, 0.6, 0.9];
        let c = calibrate_threshold(&scores, &[true, true, false, false]).unwrap();
        // brute-force sweep: sentinel 0.1-1 -> 50, 0.25 -> 25, 0.5 -> 0, 0.75 -> 25, 0.9+1 -> 50
        assert_eq!(c.accuracy, 50.0);
        assert!(c.threshold < 0.1);
        assert!(matches!(calibrate_threshold(&scores, &[true; 4]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn accuracy_examples() {
        let labels = [true, false, true, true];
        assert_eq!(accuracy_at(&[0.5; 4], &labels, 0.1).unwrap(), 75.0);
        assert_eq!(accuracy_at(&[1.0, 0.0, 1.0, 1.0], &labels, 0.5).unwrap(), 100.0);
        assert!(matches!(accuracy_at(&[0.5], &labels, 0.1), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn non_em_detection() {
        let labels = [true, true, false, true];
        let em = [false, false, false, true];
        assert_eq!(non_em_detection_rate(&[1.0, 1.0, 0.0, 0.0], &labels, &em, 0.5).unwrap(), 100.0);
        assert_eq!(non_em_detection_rate(&[0.4, 0.6, 0.0, 0.0], &labels, &em, 0.5).unwrap(), 50.0);
        assert_eq!(non_em_detection_rate(&[0.4, 0.6, 0.0, 0.0], &labels, &em, 2.0).unwrap(), 0.0);
        assert!(non_em_detection_rate(&[0.4], &[false], &[false], 0.5).is_err());
    }

    #[test]
    fn language_distribution_edges() {
        let mut j = JudgmentIndex::default();
        let en = vec![ex("e1", "en", &[("en", false), ("en", false)], &mut j)];
        let d = passage_language_distribution(&en);
        assert_eq!(d[&l("en")], LanguageDistribution { in_lang: 100.0, en: 0.0, other: 0.0 });
        let third = vec![ex("e2", "te", &[("hi", false)], &mut j)];
        assert_eq!(passage_language_distribution(&third)[&l("te")].other, 100.0);
    }
}
