//! Domain types shared across the toolkit.
//!
//! All types are plain immutable values once validated. Constructors and
//! `validate` methods enforce the invariants; the serde representations match
//! the line-delimited file formats read by [`crate::ingest`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// BCP-47-ish language tag: 2 or 3 lowercase letters with an optional
/// `-region` subtag (`"ja"`, `"pt-BR"`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct LanguageCode(String);

impl LanguageCode {
    pub fn new(code: impl Into<String>) -> Result<Self> {
        let code = code.into();
        if is_valid_language_tag(&code) {
            Ok(LanguageCode(code))
        } else {
            Err(Error::invalid(
                "language",
                format!("{code:?} is not a language tag (expected e.g. \"bn\" or \"pt-BR\")"),
            ))
        }
    }

    pub fn english() -> Self {
        LanguageCode("en".to_owned())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_english(&self) -> bool {
        self.0 == "en" || self.0.starts_with("en-")
    }
}

fn is_valid_language_tag(code: &str) -> bool {
    let (primary, region) = match code.split_once('-') {
        Some((p, r)) => (p, Some(r)),
        None => (code, None),
    };
    let primary_ok =
        (2..=3).contains(&primary.len()) && primary.bytes().all(|b| b.is_ascii_lowercase());
    let region_ok = region.is_none_or(|r| {
        (2..=8).contains(&r.len()) && r.bytes().all(|b| b.is_ascii_alphanumeric())
    });
    primary_ok && region_ok
}

impl TryFrom<String> for LanguageCode {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        LanguageCode::new(value)
    }
}

impl From<LanguageCode> for String {
    fn from(value: LanguageCode) -> Self {
        value.0
    }
}

impl fmt::Display for LanguageCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Text and language a passage had before machine translation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OriginalText {
    pub language: LanguageCode,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Passage {
    pub passage_id: String,
    pub text: String,
    pub language: LanguageCode,
    /// 1 = top-ranked by the retriever.
    pub retrieval_rank: u32,
    #[serde(default, skip_serializing_if = "is_false")]
    pub translated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<OriginalText>,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl Passage {
    pub fn new(
        passage_id: impl Into<String>,
        text: impl Into<String>,
        language: LanguageCode,
        retrieval_rank: u32,
    ) -> Result<Self> {
        let passage = Passage {
            passage_id: passage_id.into(),
            text: text.into(),
            language,
            retrieval_rank,
            translated: false,
            original: None,
        };
        passage.validate("passage")?;
        Ok(passage)
    }

    fn validate(&self, path: &str) -> Result<()> {
        if self.passage_id.is_empty() {
            return Err(Error::invalid(format!("{path}.passage_id"), "empty passage_id"));
        }
        if self.text.is_empty() {
            return Err(Error::invalid(format!("{path}.text"), "empty passage text"));
        }
        if self.retrieval_rank == 0 {
            return Err(Error::invalid(
                format!("{path}.retrieval_rank"),
                "retrieval_rank must be >= 1",
            ));
        }
        Ok(())
    }

    /// Language the passage was retrieved in, before any translation.
    pub fn source_language(&self) -> &LanguageCode {
        self.original
            .as_ref()
            .map(|o| &o.language)
            .unwrap_or(&self.language)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    YesNo,
    ShortSpan,
}

impl AnswerType {
    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::YesNo => "yes_no",
            AnswerType::ShortSpan => "short_span",
        }
    }
}

/// Query-side fields as they were before translation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OriginalQuery {
    pub language: LanguageCode,
    pub query: String,
    pub answer: String,
    pub gold_answers: Vec<String>,
}

/// One QA system output: the query, the predicted answer, the gold answers
/// and the passages that were fed to the generator.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Example {
    pub example_id: String,
    pub query: String,
    pub query_language: LanguageCode,
    pub answer: String,
    pub gold_answers: Vec<String>,
    pub answer_type: AnswerType,
    pub passages: Vec<Passage>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<OriginalQuery>,
}

impl Example {
    /// Checks every invariant, reporting the first violation with its field path.
    pub fn validate(&self) -> Result<()> {
        if self.example_id.is_empty() {
            return Err(Error::invalid("example_id", "empty example_id"));
        }
        if self.answer.trim().is_empty() {
            return Err(Error::invalid("answer", "empty answer"));
        }
        let mut seen = HashSet::new();
        for (i, p) in self.passages.iter().enumerate() {
            let path = format!("passages[{i}]");
            p.validate(&path)?;
            if !seen.insert(p.passage_id.as_str()) {
                return Err(Error::invalid(
                    format!("{path}.passage_id"),
                    format!("duplicate passage_id {:?}", p.passage_id),
                ));
            }
        }
        for (i, p) in self.passages.iter().enumerate() {
            let expected = i as u32 + 1;
            if p.retrieval_rank != expected {
                return Err(Error::invalid(
                    format!("passages[{i}].retrieval_rank"),
                    format!(
                        "non-contiguous ranks: expected {expected}, found {}",
                        p.retrieval_rank
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn passage(&self, passage_id: &str) -> Option<&Passage> {
        self.passages.iter().find(|p| p.passage_id == passage_id)
    }

    /// Language the query was asked in, before any translation.
    pub fn source_language(&self) -> &LanguageCode {
        self.original
            .as_ref()
            .map(|o| &o.language)
            .unwrap_or(&self.query_language)
    }
}

/// Returns `e` unchanged if all invariants hold.
pub fn validate_example(e: Example) -> Result<Example> {
    e.validate()?;
    Ok(e)
}

/// Annotation scenario: judged in the query language (S1) or in English (S2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    InLanguage,
    InEnglish,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::InLanguage => "in_language",
            Scenario::InEnglish => "in_english",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in_language" => Ok(Scenario::InLanguage),
            "in_english" => Ok(Scenario::InEnglish),
            other => Err(Error::invalid("scenario", format!("unknown scenario {other:?}"))),
        }
    }
}

/// One rater's answers for one (query, answer, passage) triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RatingRecord {
    pub example_id: String,
    pub passage_id: String,
    pub rater_id: String,
    pub scenario: Scenario,
    pub interpretable: Option<bool>,
    pub attributed: Option<bool>,
    pub flagged: bool,
}

impl RatingRecord {
    pub fn validate(&self) -> Result<()> {
        if self.flagged && self.attributed.is_some() {
            return Err(Error::invalid(
                "attributed",
                "flagged records carry no judgment",
            ));
        }
        if self.interpretable == Some(false) && self.attributed.is_some() {
            return Err(Error::invalid(
                "attributed",
                "uninterpretable records carry no attribution judgment",
            ));
        }
        Ok(())
    }

    pub fn pair_key(&self) -> PairKey {
        PairKey::new(&self.example_id, &self.passage_id)
    }

    /// The attribution vote, if this record is usable for aggregation.
    pub fn vote(&self) -> Option<bool> {
        if self.flagged || self.interpretable == Some(false) {
            None
        } else {
            self.attributed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairKey {
    pub example_id: String,
    pub passage_id: String,
}

impl PairKey {
    pub fn new(example_id: &str, passage_id: &str) -> Self {
        PairKey {
            example_id: example_id.to_owned(),
            passage_id: passage_id.to_owned(),
        }
    }
}

/// Gold attribution label for one (example, passage) pair in one scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttributionJudgment {
    pub example_id: String,
    pub passage_id: String,
    pub scenario: Scenario,
    #[serde(with = "bit")]
    pub label: bool,
    pub yes_votes: u32,
    pub valid_rating_count: u32,
}

impl AttributionJudgment {
    pub fn validate(&self) -> Result<()> {
        if self.valid_rating_count < 2 {
            return Err(Error::invalid(
                "valid_rating_count",
                "a judgment needs at least two valid ratings",
            ));
        }
        if self.yes_votes > self.valid_rating_count {
            return Err(Error::invalid("yes_votes", "more yes votes than valid ratings"));
        }
        if self.label != (self.yes_votes >= 2) {
            return Err(Error::invalid("label", "label must be 1 iff yes_votes >= 2"));
        }
        Ok(())
    }

    pub fn pair_key(&self) -> PairKey {
        PairKey::new(&self.example_id, &self.passage_id)
    }
}

/// Serializes a boolean as the integers 0 and 1.
pub(crate) mod bit {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(u8::from(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(de::Error::custom(format!("expected 0 or 1, found {other}"))),
        }
    }
}

/// Gold labels for one scenario, indexed by (example_id, passage_id).
#[derive(Debug, Clone, Default)]
pub struct JudgmentIndex {
    labels: HashMap<String, HashMap<String, bool>>,
}

impl JudgmentIndex {
    /// Indexes the judgments that belong to `scenario`; others are ignored.
    pub fn new<'a>(
        judgments: impl IntoIterator<Item = &'a AttributionJudgment>,
        scenario: Scenario,
    ) -> Self {
        let mut index = JudgmentIndex::default();
        for j in judgments.into_iter().filter(|j| j.scenario == scenario) {
            index.insert(&j.example_id, &j.passage_id, j.label);
        }
        index
    }

    pub fn insert(&mut self, example_id: &str, passage_id: &str, label: bool) {
        self.labels
            .entry(example_id.to_owned())
            .or_default()
            .insert(passage_id.to_owned(), label);
    }

    pub fn label(&self, example_id: &str, passage_id: &str) -> Option<bool> {
        self.labels.get(example_id)?.get(passage_id).copied()
    }

    pub fn len(&self) -> usize {
        self.labels.values().map(HashMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A passage with the attribution probability a scorer assigned to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPassage {
    pub passage_id: String,
    pub score: f64,
    pub scorer_name: String,
}

impl ScoredPassage {
    pub fn new(
        passage_id: impl Into<String>,
        score: f64,
        scorer_name: impl Into<String>,
    ) -> Result<Self> {
        let scorer_name = scorer_name.into();
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::ScoreOutOfRange {
                source_name: scorer_name,
                score,
            });
        }
        Ok(ScoredPassage {
            passage_id: passage_id.into(),
            score,
            scorer_name,
        })
    }
}

/// A top-1 / all pair of AIS percentages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PoolPair {
    pub top1: Option<f64>,
    pub all: Option<f64>,
}

/// AIS over all answers, EM answers and non-EM answers for one subset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AisCells {
    pub ais: PoolPair,
    pub of_em: PoolPair,
    pub non_em: PoolPair,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SubsetBreakdown {
    pub any: AisCells,
    pub lang: AisCells,
    pub en: AisCells,
}

/// Share of pooled passages in the query language, in English, or neither.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageDistribution {
    pub in_lang: f64,
    pub en: f64,
    pub other: f64,
}

/// Metrics for one query language. Absent values are undefined, never zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageReport {
    pub examples: usize,
    pub excluded: usize,
    pub ais_top1: Option<f64>,
    pub ais_all: Option<f64>,
    pub ais_reranked: Option<f64>,
    pub ais_of_em: Option<f64>,
    pub ais_non_em: Option<f64>,
    pub breakdown: SubsetBreakdown,
    pub ais_yes_no: Option<f64>,
    pub ais_short_span: Option<f64>,
    pub threshold: Option<f64>,
    pub accuracy: Option<f64>,
    pub roc_auc: Option<f64>,
    pub non_em_detection: Option<f64>,
    pub agreement_with_consensus: Option<f64>,
    pub scenario_disagreement: Option<f64>,
    pub scenario_disagreement_translated: Option<f64>,
    pub relative_improvement: Option<f64>,
    pub passage_distribution: Option<LanguageDistribution>,
}

/// Column means across languages for the reranking table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RerankAverage {
    pub top1: Option<f64>,
    pub all: Option<f64>,
    pub reranked: Option<f64>,
    pub relative_improvement: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scenario: Scenario,
    pub scorer: Option<String>,
    pub languages: BTreeMap<LanguageCode, LanguageReport>,
    pub rerank_average: Option<RerankAverage>,
}

impl EvalReport {
    pub fn new(scenario: Scenario) -> Self {
        EvalReport {
            scenario,
            scorer: None,
            languages: BTreeMap::new(),
            rerank_average: None,
        }
    }

    /// Checks that percentages lie in [0, 100] and AUCs in [0, 1].
    pub fn validate(&self) -> Result<()> {
        for (lang, r) in &self.languages {
            let pct = |name: &str, v: Option<f64>| -> Result<()> {
                match v {
                    Some(x) if !(0.0..=100.0).contains(&x) => Err(Error::invalid(
                        format!("languages.{lang}.{name}"),
                        format!("{x} is not a percentage"),
                    )),
                    _ => Ok(()),
                }
            };
            pct("ais_top1", r.ais_top1)?;
            pct("ais_all", r.ais_all)?;
            pct("ais_reranked", r.ais_reranked)?;
            pct("ais_of_em", r.ais_of_em)?;
            pct("ais_non_em", r.ais_non_em)?;
            pct("accuracy", r.accuracy)?;
            pct("non_em_detection", r.non_em_detection)?;
            pct("agreement_with_consensus", r.agreement_with_consensus)?;
            pct("scenario_disagreement", r.scenario_disagreement)?;
            for cells in [&r.breakdown.any, &r.breakdown.lang, &r.breakdown.en] {
                for pair in [cells.ais, cells.of_em, cells.non_em] {
                    pct("breakdown", pair.top1)?;
                    pct("breakdown", pair.all)?;
                }
            }
            if let Some(auc) = r.roc_auc {
                if !(0.0..=1.0).contains(&auc) {
                    return Err(Error::invalid(
                        format!("languages.{lang}.roc_auc"),
                        format!("{auc} is outside [0, 1]"),
                    ));
                }
            }
        }
        Ok(())
    }
}
