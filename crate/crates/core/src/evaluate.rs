//! Assembles an [`EvalReport`] from examples, judgments, ratings and scores.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::aggregate::{agreement_by_language, scenario_disagreement, translated_from_english};
use crate::error::{Error, Result};
use crate::metrics::{
    accuracy_at, ais_breakdown_by_em, ais_tally, calibrate_threshold, exact_match_bits,
    non_em_detection_rate, passage_language_distribution, roc_auc, AisOptions, Calibration, Pool,
    SubsetFilter, Top1Mode,
};
use crate::model::{
    AisCells, AnswerType, AttributionJudgment, EvalReport, Example, JudgmentIndex, LanguageCode,
    LanguageReport, PoolPair, RatingRecord, RerankAverage, Scenario, ScoredPassage,
};
use crate::rerank::{mean, relative_improvement, reranked_ais_tally};

/// Per-language calibrated thresholds, as written by `calibrate`.
pub type Thresholds = BTreeMap<LanguageCode, Calibration>;

#[derive(Debug, Clone, Default, PartialEq)]
pub enum ThresholdMode {
    /// Calibrate on each language's own pairs.
    #[default]
    PerLanguage,
    /// One threshold for every language.
    Global(f64),
    /// Previously calibrated thresholds; languages without one are left undefined.
    Fixed(BTreeMap<LanguageCode, f64>),
}

#[derive(Debug, Clone, Copy)]
pub struct EvalInputs<'a> {
    pub examples: &'a [Example],
    /// Judgments of every scenario; the evaluated one is selected by `scenario`.
    pub judgments: &'a [AttributionJudgment],
    pub scenario: Scenario,
    pub ratings: Option<&'a [RatingRecord]>,
    pub scores: Option<&'a HashMap<String, Vec<ScoredPassage>>>,
    pub scorer: Option<&'a str>,
    pub top1_mode: Top1Mode,
}

impl<'a> EvalInputs<'a> {
    pub fn new(examples: &'a [Example], judgments: &'a [AttributionJudgment], scenario: Scenario) -> Self {
        EvalInputs {
            examples,
            judgments,
            scenario,
            ratings: None,
            scores: None,
            scorer: None,
            top1_mode: Top1Mode::WithinSubset,
        }
    }
}

/// Examples grouped by query language (original language for translated queries).
pub fn by_language(examples: &[Example]) -> BTreeMap<LanguageCode, Vec<Example>> {
    let mut out: BTreeMap<LanguageCode, Vec<Example>> = BTreeMap::new();
    for e in examples {
        out.entry(e.source_language().clone()).or_default().push(e.clone());
    }
    out
}

/// One judged and scored pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionPoint {
    pub score: f64,
    pub label: bool,
    pub exact_match: Option<bool>,
}

/// Pairs that have both a judgment and a score, in example then rank order.
pub fn detection_points(
    examples: &[Example],
    judgments: &JudgmentIndex,
    scores: &HashMap<String, Vec<ScoredPassage>>,
) -> Vec<DetectionPoint> {
    let em = exact_match_bits(examples);
    let mut out = Vec::new();
    for (e, em) in examples.iter().zip(em) {
        let Some(scored) = scores.get(&e.example_id) else { continue };
        for p in &e.passages {
            let label = judgments.label(&e.example_id, &p.passage_id);
            let score = scored.iter().find(|s| s.passage_id == p.passage_id);
            if let (Some(label), Some(s)) = (label, score) {
                out.push(DetectionPoint {
                    score: s.score,
                    label,
                    exact_match: em,
                });
            }
        }
    }
    out
}

fn split(points: &[DetectionPoint]) -> (Vec<f64>, Vec<bool>) {
    points.iter().map(|p| (p.score, p.label)).unzip()
}

/// Calibrates a threshold per query language.
pub fn calibrate_by_language(
    examples: &[Example],
    judgments: &JudgmentIndex,
    scores: &HashMap<String, Vec<ScoredPassage>>,
) -> Result<Thresholds> {
    let mut out = Thresholds::new();
    for (lang, group) in by_language(examples) {
        let (s, l) = split(&detection_points(&group, judgments, scores));
        match calibrate_threshold(&s, &l) {
            Ok(c) => {
                out.insert(lang, c);
            }
            Err(Error::UndefinedMetric(msg)) => log::warn!("{lang}: no threshold ({msg})"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// One threshold calibrated on every language's pairs together.
pub fn calibrate_global(
    examples: &[Example],
    judgments: &JudgmentIndex,
    scores: &HashMap<String, Vec<ScoredPassage>>,
) -> Result<Calibration> {
    let (s, l) = split(&detection_points(examples, judgments, scores));
    calibrate_threshold(&s, &l)
}

fn defined(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn cells(group: &[Example], index: &JudgmentIndex, subset: SubsetFilter, top1_mode: Top1Mode) -> Result<AisCells> {
    let known: Vec<(Example, bool)> = group
        .iter()
        .zip(exact_match_bits(group))
        .filter_map(|(e, em)| em.map(|em| (e.clone(), em)))
        .collect();
    let (em_examples, em_bits): (Vec<Example>, Vec<bool>) = known.into_iter().unzip();
    let mut out = AisCells::default();
    for pool in [Pool::Top1, Pool::All] {
        let opts = AisOptions {
            pool,
            subset,
            top1_mode,
        };
        let ais = ais_tally(group, index, opts).percentage().ok();
        let strata = ais_breakdown_by_em(&em_examples, index, &em_bits, opts)?;
        let set = |pair: &mut PoolPair, v: Option<f64>| match pool {
            Pool::Top1 => pair.top1 = v,
            Pool::All => pair.all = v,
        };
        set(&mut out.ais, ais);
        set(&mut out.of_em, strata.of_em);
        set(&mut out.non_em, strata.non_em);
    }
    Ok(out)
}

fn excluded_count(group: &[Example], index: &JudgmentIndex, top1_mode: Top1Mode) -> usize {
    let mut ids = BTreeSet::new();
    for pool in [Pool::Top1, Pool::All] {
        let opts = AisOptions {
            pool,
            subset: SubsetFilter::Any,
            top1_mode,
        };
        ids.extend(ais_tally(group, index, opts).excluded);
    }
    ids.len()
}

fn by_answer_type(group: &[Example], index: &JudgmentIndex, t: AnswerType) -> Option<f64> {
    let members = group.iter().filter(|e| e.answer_type == t);
    ais_tally(members, index, AisOptions::new(Pool::All, SubsetFilter::Any))
        .percentage()
        .ok()
}

/// Builds the full per-language report.
pub fn evaluate(inputs: EvalInputs<'_>, thresholds: &ThresholdMode) -> Result<EvalReport> {
    let index = JudgmentIndex::new(inputs.judgments, inputs.scenario);
    let mut report = EvalReport::new(inputs.scenario);
    report.scorer = inputs.scorer.map(str::to_owned);

    let agreement = inputs
        .ratings
        .map(|r| agreement_by_language(inputs.examples, inputs.judgments, r, inputs.scenario));
    let distribution = passage_language_distribution(inputs.examples);
    let s1: Vec<AttributionJudgment> =
        inputs.judgments.iter().filter(|j| j.scenario == Scenario::InLanguage).cloned().collect();
    let s2: Vec<AttributionJudgment> =
        inputs.judgments.iter().filter(|j| j.scenario == Scenario::InEnglish).cloned().collect();

    for (lang, group) in by_language(inputs.examples) {
        let mut r = LanguageReport {
            examples: group.len(),
            excluded: excluded_count(&group, &index, inputs.top1_mode),
            ..Default::default()
        };
        r.breakdown.any = cells(&group, &index, SubsetFilter::Any, inputs.top1_mode)?;
        r.breakdown.lang = cells(&group, &index, SubsetFilter::InLanguage, inputs.top1_mode)?;
        r.breakdown.en = cells(&group, &index, SubsetFilter::EnglishExclusive, inputs.top1_mode)?;
        r.ais_top1 = r.breakdown.any.ais.top1;
        r.ais_all = r.breakdown.any.ais.all;
        r.ais_of_em = r.breakdown.any.of_em.all;
        r.ais_non_em = r.breakdown.any.non_em.all;
        r.ais_yes_no = by_answer_type(&group, &index, AnswerType::YesNo);
        r.ais_short_span = by_answer_type(&group, &index, AnswerType::ShortSpan);
        r.passage_distribution = distribution.get(&lang).copied();

        if let Some(scores) = inputs.scores {
            let points = detection_points(&group, &index, scores);
            let (s, l) = split(&points);
            let threshold = match thresholds {
                ThresholdMode::PerLanguage => defined(calibrate_threshold(&s, &l).map(|c| c.threshold))?,
                ThresholdMode::Global(t) => Some(*t),
                ThresholdMode::Fixed(map) => map.get(&lang).copied(),
            };
            r.threshold = threshold;
            r.roc_auc = defined(roc_auc(&s, &l))?;
            if let Some(t) = threshold {
                r.accuracy = if s.is_empty() { None } else { Some(accuracy_at(&s, &l, t)?) };
                let em: Vec<bool> = points.iter().map(|p| p.exact_match.unwrap_or(true)).collect();
                r.non_em_detection = defined(non_em_detection_rate(&s, &l, &em, t))?;
            }
            r.ais_reranked = reranked_ais_tally(&group, &index, scores)?.percentage().ok();
            if let (Some(before), Some(after)) = (r.ais_top1, r.ais_reranked) {
                r.relative_improvement = defined(relative_improvement(before, after))?;
            }
        }

        if let Some(agreement) = &agreement {
            r.agreement_with_consensus = agreement.get(&lang).copied().flatten();
        }
        let ids: BTreeSet<&str> = group.iter().map(|e| e.example_id.as_str()).collect();
        let in_group = |js: &[AttributionJudgment]| -> Vec<AttributionJudgment> {
            js.iter().filter(|j| ids.contains(j.example_id.as_str())).cloned().collect()
        };
        let (g1, g2) = (in_group(&s1), in_group(&s2));
        r.scenario_disagreement = defined(scenario_disagreement(&g1, &g2, None))?;
        let translated = translated_from_english(&group);
        r.scenario_disagreement_translated = defined(scenario_disagreement(&g1, &g2, Some(&translated)))?;

        report.languages.insert(lang, r);
    }
    report.rerank_average = rerank_average(&report);
    report.validate()?;
    Ok(report)
}

/// Report with only the reranking columns filled: top-1, all-passages and
/// reranked AIS plus relative improvement, per language and on average.
pub fn rerank_report(
    examples: &[Example],
    judgments: &[AttributionJudgment],
    scenario: Scenario,
    scores: &HashMap<String, Vec<ScoredPassage>>,
    top1_mode: Top1Mode,
) -> Result<EvalReport> {
    let index = JudgmentIndex::new(judgments, scenario);
    let mut report = EvalReport::new(scenario);
    report.scorer = scores.values().flatten().next().map(|s| s.scorer_name.clone());
    for (lang, group) in by_language(examples) {
        let pct = |pool| {
            let opts = AisOptions {
                pool,
                subset: SubsetFilter::Any,
                top1_mode,
            };
            ais_tally(&group, &index, opts).percentage().ok()
        };
        let mut r = LanguageReport {
            examples: group.len(),
            excluded: excluded_count(&group, &index, top1_mode),
            ais_top1: pct(Pool::Top1),
            ais_all: pct(Pool::All),
            ais_reranked: reranked_ais_tally(&group, &index, scores)?.percentage().ok(),
            ..Default::default()
        };
        if let (Some(before), Some(after)) = (r.ais_top1, r.ais_reranked) {
            r.relative_improvement = defined(relative_improvement(before, after))?;
        }
        report.languages.insert(lang, r);
    }
    report.rerank_average = rerank_average(&report);
    report.validate()?;
    Ok(report)
}

/// Column means of the reranking table; `None` unless some language was reranked.
pub fn rerank_average(report: &EvalReport) -> Option<RerankAverage> {
    let rows: Vec<&LanguageReport> = report.languages.values().filter(|r| r.ais_reranked.is_some()).collect();
    if rows.is_empty() {
        return None;
    }
    let col = |f: fn(&LanguageReport) -> Option<f64>| -> Option<f64> {
        let vals: Option<Vec<f64>> = rows.iter().map(|r| f(r)).collect();
        vals.and_then(|v| mean(&v))
    };
    Some(RerankAverage {
        top1: col(|r| r.ais_top1),
        all: col(|r| r.ais_all),
        reranked: col(|r| r.ais_reranked),
        relative_improvement: col(|r| r.relative_improvement),
    })
}

/// Thresholds file format: `{"<lang>": {"threshold": t, "accuracy": a}}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ThresholdsFile {
    #[serde(default)]
    pub global: Option<Calibration>,
    #[serde(default)]
    pub languages: Thresholds,
}

impl ThresholdsFile {
    pub fn mode(&self) -> ThresholdMode {
        match self.global {
            Some(c) => ThresholdMode::Global(c.threshold),
            None => ThresholdMode::Fixed(self.languages.iter().map(|(l, c)| (l.clone(), c.threshold)).collect()),
        }
    }
}
