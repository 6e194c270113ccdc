//! Attribution detection: map a (query, answer, passage) triple to the
//! probability that the answer is attributable to the passage.

mod mock;
pub mod prompt;
pub mod remote;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::http::RetryPolicy;
use crate::model::{AnswerType, Example, JudgmentIndex, LanguageCode, Passage};
use crate::translate::{translate_example_for_test, Translator};

pub use mock::{mock_score, unit_hash, MockMode, MockScorer};
pub use prompt::{
    build_fewshot_prompt, build_prompt, build_prompt_parts, invert_prompt, Exemplar,
    FewShotTarget, PromptTriple, Template, NLI_TEMPLATE,
};
pub use remote::{remote_score, ScoringClient};

/// NFKC, default case folding, then whitespace trimmed and collapsed.
pub fn normalize(text: &str) -> String {
    let nfkc: String = text.nfkc().collect();
    let folded = caseless::default_case_fold_str(&nfkc);
    folded.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// 1.0 iff the normalized answer occurs in the normalized passage text.
/// Yes/no answers always score 0.0 (the majority class).
pub fn string_match_score(e: &Example, p: &Passage) -> f64 {
    if e.answer_type == AnswerType::YesNo {
        return 0.0;
    }
    let answer = normalize(&e.answer);
    if !answer.is_empty() && normalize(&p.text).contains(&answer) {
        1.0
    } else {
        0.0
    }
}

/// Anything that can estimate attribution for a passage of an example.
/// Implementations must be safe to call from many threads at once.
pub trait Scorer: Send + Sync {
    fn name(&self) -> &str;
    fn score(&self, example: &Example, passage: &Passage) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct StringMatch;

impl Scorer for StringMatch {
    fn name(&self) -> &str {
        "string-match"
    }

    fn score(&self, example: &Example, passage: &Passage) -> Result<f64> {
        Ok(string_match_score(example, passage))
    }
}

/// String match after translating query, answer and passage to English.
pub struct StringMatchTranslateTest {
    translator: Arc<Translator>,
}

impl StringMatchTranslateTest {
    pub fn new(translator: Arc<Translator>) -> Self {
        StringMatchTranslateTest { translator }
    }
}

fn translated_pair(
    translator: &Translator,
    example: &Example,
    passage: &Passage,
) -> Result<(Example, Passage)> {
    let mut single = example.clone();
    single.passages = vec![Passage {
        retrieval_rank: 1,
        ..passage.clone()
    }];
    let translated = translate_example_for_test(&single, &LanguageCode::english(), translator)?;
    let p = translated.passages[0].clone();
    Ok((translated, p))
}

impl Scorer for StringMatchTranslateTest {
    fn name(&self) -> &str {
        "string-match-tt"
    }

    fn score(&self, example: &Example, passage: &Passage) -> Result<f64> {
        let (e, p) = translated_pair(&self.translator, example, passage)?;
        Ok(string_match_score(&e, &p))
    }
}

/// Entailment scorer behind the scoring wire protocol.
pub struct RemoteEntailment {
    name: String,
    client: ScoringClient,
    template_id: String,
    translate_test: Option<Arc<Translator>>,
}

impl RemoteEntailment {
    pub fn new(name: impl Into<String>, client: ScoringClient, template_id: &str) -> Result<Self> {
        Template::from_id(template_id)?;
        Ok(RemoteEntailment {
            name: name.into(),
            client,
            template_id: template_id.to_owned(),
            translate_test: None,
        })
    }

    /// Translate inputs to English before scoring.
    pub fn with_translate_test(mut self, translator: Arc<Translator>) -> Self {
        self.translate_test = Some(translator);
        self
    }
}

impl Scorer for RemoteEntailment {
    fn name(&self) -> &str {
        &self.name
    }

    fn score(&self, example: &Example, passage: &Passage) -> Result<f64> {
        let triple = match &self.translate_test {
            Some(t) => {
                let (e, p) = translated_pair(t, example, passage)?;
                build_prompt(&e, &p, &self.template_id)?
            }
            None => build_prompt(example, passage, &self.template_id)?,
        };
        self.client.score(&triple)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    StringMatch,
    StringMatchTranslateTest,
    RemoteEntailment,
    Mock,
}

/// Declarative description of a scorer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerSpec {
    pub name: String,
    pub kind: ScorerKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default = "default_template")]
    pub template_id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub mock_mode: MockMode,
}

fn default_template() -> String {
    NLI_TEMPLATE.to_owned()
}

impl ScorerSpec {
    pub fn new(name: impl Into<String>, kind: ScorerKind) -> Self {
        ScorerSpec {
            name: name.into(),
            kind,
            endpoint: None,
            template_id: default_template(),
            seed: None,
            mock_mode: MockMode::Hash,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Template::from_id(&self.template_id)?;
        match self.kind {
            ScorerKind::RemoteEntailment if self.endpoint.is_none() => Err(Error::Config(
                "remote entailment scorer requires an endpoint".into(),
            )),
            ScorerKind::Mock if self.seed.is_none() => {
                Err(Error::Config("mock scorer requires a seed".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Runtime collaborators a scorer may need.
#[derive(Clone, Default)]
pub struct ScorerContext {
    pub judgments: Option<Arc<JudgmentIndex>>,
    pub translator: Option<Arc<Translator>>,
    pub retry: RetryPolicy,
}

pub fn build_scorer(spec: &ScorerSpec, ctx: &ScorerContext) -> Result<Arc<dyn Scorer>> {
    spec.validate()?;
    let need_translator = || {
        ctx.translator
            .clone()
            .ok_or_else(|| Error::Config(format!("scorer {} needs a translation client", spec.name)))
    };
    Ok(match spec.kind {
        ScorerKind::StringMatch => Arc::new(StringMatch),
        ScorerKind::StringMatchTranslateTest => {
            Arc::new(StringMatchTranslateTest::new(need_translator()?))
        }
        ScorerKind::RemoteEntailment => {
            let endpoint = spec.endpoint.as_deref().unwrap_or_default();
            let client = ScoringClient::new(endpoint, ctx.retry)?;
            let scorer = RemoteEntailment::new(spec.name.clone(), client, &spec.template_id)?;
            match &ctx.translator {
                Some(t) => Arc::new(scorer.with_translate_test(t.clone())),
                None => Arc::new(scorer),
            }
        }
        ScorerKind::Mock => {
            let seed = spec.seed.unwrap_or_default();
            Arc::new(MockScorer::new(spec.name.clone(), seed, spec.mock_mode, ctx.judgments.clone())?)
        }
    })
}

/// One successful (example, passage) score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub example_id: String,
    pub passage_id: String,
    pub score: f64,
    pub scorer: String,
}

#[derive(Debug)]
pub struct ScoringFailure {
    pub example_id: String,
    pub passage_id: String,
    pub error: Error,
}

/// Scores every passage of every example on at most `jobs` threads.
///
/// Failures are reported per item; one bad item does not discard the others.
/// Output order follows input order.
pub fn score_examples(
    scorer: &dyn Scorer,
    examples: &[Example],
    jobs: usize,
) -> (Vec<ScoreRecord>, Vec<ScoringFailure>) {
    let items: Vec<(&Example, &Passage)> = examples
        .iter()
        .flat_map(|e| e.passages.iter().map(move |p| (e, p)))
        .collect();
    let run = || {
        items
            .par_iter()
            .map(|(e, p)| {
                scorer.score(e, p).and_then(|s| {
                    if (0.0..=1.0).contains(&s) {
                        Ok(s)
                    } else {
                        Err(Error::ScoreOutOfRange {
                            source_name: scorer.name().to_owned(),
                            score: s,
                        })
                    }
                })
            })
            .collect::<Vec<_>>()
    };
    let results = match rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    };
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for ((e, p), r) in items.into_iter().zip(results) {
        match r {
            Ok(score) => ok.push(ScoreRecord {
                example_id: e.example_id.clone(),
                passage_id: p.passage_id.clone(),
                score,
                scorer: scorer.name().to_owned(),
            }),
            Err(error) => failed.push(ScoringFailure {
                example_id: e.example_id.clone(),
                passage_id: p.passage_id.clone(),
                error,
            }),
        }
    }
    (ok, failed)
}
