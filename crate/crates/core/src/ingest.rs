//! Readers and writers for the line-delimited file formats.
//!
//! Every reader reports failures as `file:line: field.path: message`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{AnswerType, AttributionJudgment, Example, LanguageCode, Passage, RatingRecord};
use crate::scorer::normalize;

/// Lexicon shipped with the crate: `{"<lang>": ["<token>", ...]}`.
pub const BUNDLED_LEXICON: &str = include_str!("../data/yes_no_lexicon.json");

/// Per-language set of answers that mark a yes/no question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<LanguageCode, BTreeSet<String>>,
}

impl Lexicon {
    pub fn bundled() -> Self {
        Lexicon::from_json(BUNDLED_LEXICON).expect("bundled lexicon is valid")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let raw: BTreeMap<String, Vec<String>> = serde_json::from_str(json)
            .map_err(|e| Error::Config(format!("lexicon: {e}")))?;
        let mut entries = BTreeMap::new();
        for (lang, tokens) in raw {
            let lang = LanguageCode::new(lang)?;
            entries.insert(lang, tokens.iter().map(|t| normalize(t)).collect());
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::from_json(&text)
    }

    pub fn languages(&self) -> impl Iterator<Item = &LanguageCode> {
        self.entries.keys()
    }

    pub fn tokens(&self, lang: &LanguageCode) -> Option<&BTreeSet<String>> {
        self.entries.get(lang)
    }

    /// Serializes back to the lexicon file format (tokens normalized).
    pub fn to_json(&self) -> String {
        let raw: BTreeMap<&str, Vec<&str>> = self
            .entries
            .iter()
            .map(|(k, v)| (k.as_str(), v.iter().map(String::as_str).collect()))
            .collect();
        serde_json::to_string_pretty(&raw).expect("lexicon serializes")
    }
}

/// yes/no iff the normalized answer is a lexicon entry for `lang`.
pub fn infer_answer_type(answer: &str, lang: &LanguageCode, lexicon: &Lexicon) -> Result<AnswerType> {
    let tokens = lexicon
        .tokens(lang)
        .ok_or_else(|| Error::Config(format!("no yes/no lexicon for language {lang}")))?;
    if tokens.contains(&normalize(answer)) {
        Ok(AnswerType::YesNo)
    } else {
        Ok(AnswerType::ShortSpan)
    }
}

/// On-disk form of an example; `answer_type` may be null.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExampleRecord {
    example_id: String,
    query: String,
    query_language: LanguageCode,
    answer: String,
    gold_answers: Vec<String>,
    #[serde(default)]
    answer_type: Option<AnswerType>,
    passages: Vec<Passage>,
    #[serde(default)]
    original: Option<crate::model::OriginalQuery>,
}

/// Examples loaded from a file, with a count of inferred answer types.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedExamples {
    pub examples: Vec<Example>,
    pub inferred_answer_types: usize,
}

fn parse_lines<'a, T: DeserializeOwned>(
    file: &str,
    text: &'a str,
) -> impl Iterator<Item = Result<(usize, T)>> + use<'a, T> {
    let file = file.to_owned();
    text.lines().enumerate().filter_map(move |(i, line)| {
        if line.trim().is_empty() {
            return None;
        }
        let line_no = i + 1;
        let de = &mut serde_json::Deserializer::from_str(line);
        Some(
            serde_path_to_error::deserialize::<_, T>(de)
                .map(|v| (line_no, v))
                .map_err(|e| Error::Schema {
                    file: file.clone(),
                    line: line_no,
                    path: e.path().to_string(),
                    message: e.inner().to_string(),
                }),
        )
    })
}

fn schema_error(file: &str, line: usize, err: Error) -> Error {
    match err {
        Error::Invalid { path, message } => Error::Schema {
            file: file.to_owned(),
            line,
            path,
            message,
        },
        other => Error::Schema {
            file: file.to_owned(),
            line,
            path: ".".into(),
            message: other.to_string(),
        },
    }
}

/// Parses examples in file order. `file` is only used in diagnostics.
pub fn parse_examples(file: &str, text: &str, lexicon: &Lexicon) -> Result<LoadedExamples> {
    let mut examples = Vec::new();
    let mut inferred = 0;
    let mut ids = HashSet::new();
    for item in parse_lines::<ExampleRecord>(file, text) {
        let (line, rec) = item?;
        let answer_type = match rec.answer_type {
            Some(t) => t,
            None => {
                inferred += 1;
                infer_answer_type(&rec.answer, &rec.query_language, lexicon)
                    .map_err(|e| schema_error(file, line, e))?
            }
        };
        let example = Example {
            example_id: rec.example_id,
            query: rec.query,
            query_language: rec.query_language,
            answer: rec.answer,
            gold_answers: rec.gold_answers,
            answer_type,
            passages: rec.passages,
            original: rec.original,
        };
        example.validate().map_err(|e| schema_error(file, line, e))?;
        if !ids.insert(example.example_id.clone()) {
            return Err(Error::Schema {
                file: file.to_owned(),
                line,
                path: "example_id".into(),
                message: format!("duplicate example_id {:?}", example.example_id),
            });
        }
        examples.push(example);
    }
    Ok(LoadedExamples {
        examples,
        inferred_answer_types: inferred,
    })
}

pub fn load_examples_with(path: &Path, lexicon: &Lexicon) -> Result<LoadedExamples> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_examples(&path.display().to_string(), &text, lexicon)
}

/// Loads examples, resolving missing answer types with the bundled lexicon.
pub fn load_examples(path: &Path) -> Result<Vec<Example>> {
    Ok(load_examples_with(path, &Lexicon::bundled())?.examples)
}

pub fn parse_ratings(file: &str, text: &str) -> Result<Vec<RatingRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for item in parse_lines::<RatingRecord>(file, text) {
        let (line, rec) = item?;
        rec.validate().map_err(|e| schema_error(file, line, e))?;
        let key = (
            rec.example_id.clone(),
            rec.passage_id.clone(),
            rec.rater_id.clone(),
            rec.scenario,
        );
        if !seen.insert(key) {
            return Err(Error::Schema {
                file: file.to_owned(),
                line,
                path: "rater_id".into(),
                message: format!(
                    "duplicate rating by {:?} for ({:?}, {:?}, {})",
                    rec.rater_id, rec.example_id, rec.passage_id, rec.scenario
                ),
            });
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn load_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ratings(&path.display().to_string(), &text)
}

pub fn parse_judgments(file: &str, text: &str) -> Result<Vec<AttributionJudgment>> {
    let mut out = Vec::new();
    for item in parse_lines::<AttributionJudgment>(file, text) {
        let (line, j) = item?;
        j.validate().map_err(|e| schema_error(file, line, e))?;
        out.push(j);
    }
    Ok(out)
}

pub fn load_judgments(path: &Path) -> Result<Vec<AttributionJudgment>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_judgments(&path.display().to_string(), &text)
}

/// Reads any line-delimited file of `T` records.
pub fn load_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_lines(&path.display().to_string(), &text)
        .map(|r| r.map(|(_, v)| v))
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| Error::io(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Examples plus their ratings, with referential integrity checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub examples: Vec<Example>,
    pub ratings: Vec<RatingRecord>,
    /// Provenance: source system, corpus snapshot, creation date, sampling notes.
    pub metadata: BTreeMap<String, String>,
}

impl Dataset {
    pub fn new(
        examples: Vec<Example>,
        ratings: Vec<RatingRecord>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        check_references(&examples, &ratings)?;
        Ok(Dataset {
            examples,
            ratings,
            metadata,
        })
    }
}

/// Every rating must resolve to exactly one (example, passage) pair.
pub fn check_references(examples: &[Example], ratings: &[RatingRecord]) -> Result<()> {
    let mut passages: HashMap<&str, HashSet<&str>> = HashMap::new();
    for e in examples {
        let ids = passages.entry(e.example_id.as_str()).or_default();
        ids.extend(e.passages.iter().map(|p| p.passage_id.as_str()));
    }
    for (i, r) in ratings.iter().enumerate() {
        match passages.get(r.example_id.as_str()) {
            None => {
                return Err(Error::invalid(
                    format!("ratings[{i}].example_id"),
                    format!("unknown example_id {:?}", r.example_id),
                ))
            }
            Some(ids) if !ids.contains(r.passage_id.as_str()) => {
                return Err(Error::invalid(
                    format!("ratings[{i}].passage_id"),
                    format!(
                        "unknown passage_id {:?} for example {:?}",
                        r.passage_id, r.example_id
                    ),
                ))
            }
            _ => {}
        }
    }
    Ok(())
}
