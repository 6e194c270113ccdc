//! Entailment-style prompt templates and few-shot prompt assembly.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Example, LanguageCode, Passage};

/// Identifier of the only built-in template.
pub const NLI_TEMPLATE: &str = "nli";

const HYPOTHESIS_PREFIX: &str = "the answer to the question \"";
const HYPOTHESIS_MIDDLE: &str = "\" is \"";
const HYPOTHESIS_SUFFIX: &str = "\"";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Template {
    /// premise: "<p>" hypothesis: the answer to the question "<q>" is "<a>"
    Nli,
}

impl Template {
    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            NLI_TEMPLATE => Ok(Template::Nli),
            other => Err(Error::UnknownTemplate(other.to_owned())),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Template::Nli => NLI_TEMPLATE,
        }
    }
}

/// Premise/hypothesis pair sent to an entailment scorer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptTriple {
    pub premise: String,
    pub hypothesis: String,
}

impl PromptTriple {
    /// Single-string rendering used in few-shot prompts.
    pub fn render(&self) -> String {
        format!("premise: \"{}\" hypothesis: {}", self.premise, self.hypothesis)
    }
}

/// Instantiates the template with `query`, `answer` and `passage` verbatim.
/// Nothing is trimmed or escaped.
pub fn build_prompt_parts(
    query: &str,
    answer: &str,
    passage: &str,
    template_id: &str,
) -> Result<PromptTriple> {
    match Template::from_id(template_id)? {
        Template::Nli => Ok(PromptTriple {
            premise: passage.to_owned(),
            hypothesis: format!("{HYPOTHESIS_PREFIX}{query}{HYPOTHESIS_MIDDLE}{answer}{HYPOTHESIS_SUFFIX}"),
        }),
    }
}

pub fn build_prompt(e: &Example, p: &Passage, template_id: &str) -> Result<PromptTriple> {
    build_prompt_parts(&e.query, &e.answer, &p.text, template_id)
}

/// Recovers (query, answer, passage) from a triple built by [`build_prompt_parts`].
///
/// Ambiguous when the query itself contains the `" is "` delimiter: the
/// split happens at its first occurrence.
pub fn invert_prompt(triple: &PromptTriple, template_id: &str) -> Result<(String, String, String)> {
    match Template::from_id(template_id)? {
        Template::Nli => {
            let inner = triple
                .hypothesis
                .strip_prefix(HYPOTHESIS_PREFIX)
                .and_then(|h| h.strip_suffix(HYPOTHESIS_SUFFIX))
                .ok_or_else(|| Error::invalid("hypothesis", "does not match the nli template"))?;
            let (q, a) = inner
                .split_once(HYPOTHESIS_MIDDLE)
                .ok_or_else(|| Error::invalid("hypothesis", "missing answer delimiter"))?;
            Ok((q.to_owned(), a.to_owned(), triple.premise.clone()))
        }
    }
}

/// A labeled demonstration for few-shot prompting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub query: String,
    pub answer: String,
    pub passage: String,
    pub query_language: LanguageCode,
    pub passage_language: LanguageCode,
    pub label: bool,
    /// Free-text explanation, used only when rationales are requested.
    #[serde(default)]
    pub rationale: Option<String>,
}

/// The (query, answer, passage) to classify.
#[derive(Debug, Clone, Copy)]
pub struct FewShotTarget<'a> {
    pub query: &'a str,
    pub answer: &'a str,
    pub passage: &'a str,
    pub language: &'a LanguageCode,
}

fn label_word(label: bool) -> &'static str {
    if label {
        "yes"
    } else {
        "no"
    }
}

/// Builds a 4-shot prompt for `target`.
///
/// Two positives and two negatives are drawn from exemplars whose query is in
/// the target language. Within each class one exemplar has an in-language
/// passage and one an English passage. Demonstrations are ordered
/// positive, negative, positive, negative (in-language pair first), and the
/// draw is fully determined by `seed`.
pub fn build_fewshot_prompt(
    target: FewShotTarget<'_>,
    pool: &[Exemplar],
    with_rationale: bool,
    seed: u64,
    template_id: &str,
) -> Result<String> {
    let lang = target.language;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<&Exemplar> = Vec::with_capacity(4);
    let english = LanguageCode::english();
    for passage_lang in [lang, &english] {
        for class in [true, false] {
            let candidates: Vec<&Exemplar> = pool
                .iter()
                .filter(|x| {
                    &x.query_language == lang
                        && x.label == class
                        && &x.passage_language == passage_lang
                        && !chosen.iter().any(|c| std::ptr::eq(*c, *x))
                })
                .collect();
            let pick = candidates.choose(&mut rng).ok_or_else(|| {
                Error::InsufficientPool(format!(
                    "no {} exemplar for {lang} queries with a {passage_lang} passage",
                    if class { "positive" } else { "negative" }
                ))
            })?;
            if with_rationale && pick.rationale.is_none() {
                return Err(Error::InsufficientPool(
                    "rationales requested but a selected exemplar has none".into(),
                ));
            }
            chosen.push(pick);
        }
    }

    let mut out = String::new();
    for x in &chosen {
        let triple = build_prompt_parts(&x.query, &x.answer, &x.passage, template_id)?;
        out.push_str(&triple.render());
        out.push('\n');
        if with_rationale {
            out.push_str("rationale: ");
            out.push_str(x.rationale.as_deref().unwrap_or_default());
            out.push('\n');
        }
        out.push_str("attributed: ");
        out.push_str(label_word(x.label));
        out.push_str("\n\n");
    }
    let triple = build_prompt_parts(target.query, target.answer, target.passage, template_id)?;
    out.push_str(&triple.render());
    out.push('\n');
    out.push_str(if with_rationale { "rationale:" } else { "attributed:" });
    Ok(out)
}
