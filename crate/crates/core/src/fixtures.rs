//! Count-exact synthetic datasets and a small handcrafted set.
//!
//! A synthetic example is one of ten passage layouts ("archetypes"), each
//! fixing which AIS indicators it contributes to. Choosing how many examples
//! of each archetype to emit makes every AIS statistic an exact count.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregate::aggregate_all;
use crate::error::{Error, Result};
use crate::ingest::write_jsonl;
use crate::mine::{DocPassage, MiningTask};
use crate::model::{
    AnswerType, AttributionJudgment, Example, LanguageCode, Passage, RatingRecord, Scenario,
};
use crate::scorer::ScoreRecord;

/// Example counts behind the six AIS indicators of one stratum.
///
/// `top1_*` use the within-subset top-1 passage; `*_en` is English-exclusive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumCounts {
    pub n: usize,
    pub top1_any: usize,
    pub top1_lang: usize,
    pub top1_en: usize,
    pub all_any: usize,
    pub all_lang: usize,
    pub all_en: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    Lang,
    En,
    Other,
}

use Slot::{En, Lang, Other};

/// Core passages per archetype, in rank order; padding follows.
const LAYOUTS: [&[(Slot, bool)]; 10] = [
    &[],
    &[(Lang, true)],
    &[(En, false), (Lang, true)],
    &[(Lang, false), (Lang, true)],
    &[(En, true), (Lang, false)],
    &[(Lang, false), (En, true)],
    &[(Lang, false), (En, false), (En, true)],
    &[(Other, true), (Lang, false)],
    &[(Lang, false), (Other, true)],
    &[(En, true), (Lang, false), (Lang, true)],
];

/// Indicator rows `[top1_any, top1_lang, top1_en, all_any, all_lang, all_en]`.
const INDICATORS: [[usize; 6]; 10] = [
    [0, 0, 0, 0, 0, 0],
    [1, 1, 0, 1, 1, 0],
    [0, 1, 0, 1, 1, 0],
    [0, 0, 0, 1, 1, 0],
    [1, 0, 1, 1, 0, 1],
    [0, 0, 1, 1, 0, 1],
    [0, 0, 0, 1, 0, 1],
    [1, 0, 0, 1, 0, 0],
    [0, 0, 0, 1, 0, 0],
    [1, 0, 0, 1, 1, 0],
];

fn count_for(p: f64, n: usize, what: &str) -> Result<usize> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Unrepresentable(format!("{what} = {p} is not a proportion")));
    }
    let exact = p * n as f64;
    let k = exact.round();
    if (exact - k).abs() > 1e-6 {
        return Err(Error::Unrepresentable(format!(
            "{what} = {p} is not a whole number of examples out of {n}"
        )));
    }
    Ok(k as usize)
}

impl StratumCounts {
    /// All attributed passages in the query language.
    pub fn from_proportions(n: usize, top1: f64, all: f64) -> Result<Self> {
        let t = count_for(top1, n, "top1")?;
        let a = count_for(all, n, "all")?;
        let c = StratumCounts {
            n,
            top1_any: t,
            top1_lang: t,
            top1_en: 0,
            all_any: a,
            all_lang: a,
            all_en: 0,
        };
        c.archetypes()?;
        Ok(c)
    }

    pub fn from_archetypes(counts: [usize; 10]) -> Self {
        let mut v = [0usize; 6];
        for (k, row) in counts.iter().zip(INDICATORS) {
            for (slot, bit) in v.iter_mut().zip(row) {
                *slot += k * bit;
            }
        }
        StratumCounts {
            n: counts.iter().sum(),
            top1_any: v[0],
            top1_lang: v[1],
            top1_en: v[2],
            all_any: v[3],
            all_lang: v[4],
            all_en: v[5],
        }
    }

    /// Archetype counts realizing these statistics.
    pub fn archetypes(&self) -> Result<[usize; 10]> {
        let s = *self;
        let bad = |why: &str| Error::Unrepresentable(format!("{s:?}: {why}"));
        if s.top1_any > s.all_any || s.top1_lang > s.all_lang || s.top1_en > s.all_en {
            return Err(bad("a top-1 count exceeds its all-passages count"));
        }
        if s.all_any > s.n || s.all_lang + s.all_en > s.all_any {
            return Err(bad("attributed counts exceed the population"));
        }
        let x2 = s.top1_lang.min(s.top1_any);
        let x3 = s.top1_lang - x2;
        let x5 = s.top1_en.min(s.top1_any - x2);
        let x6 = s.top1_en - x5;
        let rest = s.top1_any - x2 - x5;
        let x10 = rest.min(s.all_lang - s.top1_lang);
        let x8 = rest - x10;
        let x4 = s.all_lang - s.top1_lang - x10;
        let x7 = s.all_en - s.top1_en;
        let x9 = (s.all_any - s.all_lang - s.all_en)
            .checked_sub(x8)
            .ok_or_else(|| bad("top-1 count not reachable with these all-passages counts"))?;
        let x1 = s.n - s.all_any;
        let out = [x1, x2, x3, x4, x5, x6, x7, x8, x9, x10];
        debug_assert_eq!(StratumCounts::from_archetypes(out), s);
        Ok(out)
    }
}

/// One query language of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageSpec {
    pub language: LanguageCode,
    /// Answers equal to the first gold answer.
    pub exact_match: StratumCounts,
    /// Answers that differ from every gold answer.
    #[serde(default)]
    pub non_exact_match: StratumCounts,
    /// Examples without a gold answer; EM is undefined for them.
    #[serde(default)]
    pub no_gold: StratumCounts,
    /// Examples whose fixture score picks an attributed passage.
    #[serde(default)]
    pub reranked: Option<usize>,
}

impl LanguageSpec {
    pub fn new(language: &str, exact_match: StratumCounts) -> Result<Self> {
        Ok(LanguageSpec {
            language: LanguageCode::new(language)?,
            exact_match,
            non_exact_match: StratumCounts::default(),
            no_gold: StratumCounts::default(),
            reranked: None,
        })
    }

    pub fn total(&self) -> StratumCounts {
        let mut t = StratumCounts::default();
        for s in [self.exact_match, self.non_exact_match, self.no_gold] {
            t.n += s.n;
            t.top1_any += s.top1_any;
            t.top1_lang += s.top1_lang;
            t.top1_en += s.top1_en;
            t.all_any += s.all_any;
            t.all_lang += s.all_lang;
            t.all_en += s.all_en;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub languages: Vec<LanguageSpec>,
    /// Unattributed passages appended to every example.
    pub padding: usize,
    /// Probability that one of the three raters dissents from the label.
    pub dissent_rate: f64,
    /// Share of examples that also get in-English ratings.
    pub in_english_share: f64,
    /// Probability that an in-English label differs from the in-language one.
    pub in_english_flip_rate: f64,
}

impl SyntheticSpec {
    pub fn new(languages: Vec<LanguageSpec>) -> Self {
        SyntheticSpec {
            languages,
            padding: 2,
            dissent_rate: 0.2,
            in_english_share: 0.0,
            in_english_flip_rate: 0.0,
        }
    }
}

/// A generated dataset with everything needed to evaluate it offline.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub examples: Vec<Example>,
    pub ratings: Vec<RatingRecord>,
    pub judgments: Vec<AttributionJudgment>,
    /// Scores that realize each language's `reranked` count; empty otherwise.
    pub scores: Vec<ScoreRecord>,
}

pub const FIXTURE_SCORER: &str = "fixture";
const RATERS: [&str; 3] = ["r1", "r2", "r3"];

fn other_language(lang: &LanguageCode) -> LanguageCode {
    LanguageCode::new(if lang.as_str() == "de" { "fr" } else { "de" }).expect("static tag")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Stratum {
    ExactMatch,
    NonExactMatch,
    NoGold,
}

/// Builds a dataset whose AIS statistics equal `spec` exactly.
/// Identical inputs give identical output.
pub fn build_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<Fixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut examples = Vec::new();
    let mut labels: Vec<Vec<bool>> = Vec::new();
    let mut scores = Vec::new();
    for ls in &spec.languages {
        let lang = &ls.language;
        let mut items: Vec<(Stratum, usize)> = Vec::new();
        for (stratum, counts) in [
            (Stratum::ExactMatch, ls.exact_match),
            (Stratum::NonExactMatch, ls.non_exact_match),
            (Stratum::NoGold, ls.no_gold),
        ] {
            for (arch, k) in counts.archetypes()?.into_iter().enumerate() {
                items.extend(std::iter::repeat_n((stratum, arch), k));
            }
        }
        items.shuffle(&mut rng);
        if let Some(r) = ls.reranked {
            let attributed = ls.total().all_any;
            if r > attributed {
                return Err(Error::Unrepresentable(format!(
                    "{lang}: {r} reranked hits but only {attributed} attributed examples"
                )));
            }
        }
        let mut reranked_left = ls.reranked.unwrap_or(0);
        for (i, (stratum, arch)) in items.into_iter().enumerate() {
            let (e, l) = synthetic_example(lang, i, stratum, arch, spec.padding)?;
            if ls.reranked.is_some() {
                let hit = reranked_left > 0 && l.iter().any(|b| *b);
                if hit {
                    reranked_left -= 1;
                }
                let pick = l.iter().position(|b| *b == hit).expect("padding keeps an unattributed passage");
                for (k, p) in e.passages.iter().enumerate() {
                    scores.push(ScoreRecord {
                        example_id: e.example_id.clone(),
                        passage_id: p.passage_id.clone(),
                        score: if k == pick { 0.9 } else { 0.1 },
                        scorer: FIXTURE_SCORER.to_owned(),
                    });
                }
            }
            examples.push(e);
            labels.push(l);
        }
    }
    let ratings = synthetic_ratings(spec, &examples, &labels, &mut rng);
    let agg = aggregate_all(&ratings)?;
    Ok(Fixture {
        examples,
        ratings,
        judgments: agg.judgments,
        scores,
    })
}

fn synthetic_example(
    lang: &LanguageCode,
    i: usize,
    stratum: Stratum,
    arch: usize,
    padding: usize,
) -> Result<(Example, Vec<bool>)> {
    if padding == 0 {
        return Err(Error::Config("synthetic examples need at least one padding passage".into()));
    }
    let id = format!("{lang}-{i:05}");
    let answer = format!("answer {lang} {i}");
    let gold_answers = match stratum {
        Stratum::ExactMatch => vec![answer.clone()],
        Stratum::NonExactMatch => vec![format!("reference {lang} {i}")],
        Stratum::NoGold => Vec::new(),
    };
    let other = other_language(lang);
    let en = LanguageCode::english();
    let pad = (0..padding).map(|k| (if k % 2 == 0 { Lang } else { En }, false));
    let mut passages = Vec::new();
    let mut labels = Vec::new();
    for (rank, (slot, label)) in LAYOUTS[arch].iter().copied().chain(pad).enumerate() {
        let rank = rank as u32 + 1;
        let plang = match slot {
            Lang => lang.clone(),
            En => en.clone(),
            Other => other.clone(),
        };
        let text = if label {
            format!("Passage {rank} for {id} ({plang}) mentions {answer} explicitly.")
        } else {
            format!("Passage {rank} for {id} ({plang}) is on a related topic.")
        };
        passages.push(Passage::new(format!("{id}-p{rank}"), text, plang, rank)?);
        labels.push(label);
    }
    let e = Example {
        example_id: id.clone(),
        query: format!("Question {i} in {lang}?"),
        query_language: lang.clone(),
        answer,
        gold_answers,
        answer_type: AnswerType::ShortSpan,
        passages,
        original: None,
    };
    e.validate()?;
    Ok((e, labels))
}

fn three_votes(label: bool, dissent: bool, rng: &mut ChaCha8Rng) -> [bool; 3] {
    let mut votes = [label; 3];
    if dissent {
        votes[rng.random_range(0..3)] = !label;
    }
    votes
}

fn synthetic_ratings(
    spec: &SyntheticSpec,
    examples: &[Example],
    labels: &[Vec<bool>],
    rng: &mut ChaCha8Rng,
) -> Vec<RatingRecord> {
    let mut out = Vec::new();
    let mut push = |e: &Example, p: &Passage, scenario, votes: [bool; 3]| {
        for (rater, vote) in RATERS.iter().zip(votes) {
            out.push(RatingRecord {
                example_id: e.example_id.clone(),
                passage_id: p.passage_id.clone(),
                rater_id: rater.to_string(),
                scenario,
                interpretable: Some(true),
                attributed: Some(vote),
                flagged: false,
            });
        }
    };
    for (e, ls) in examples.iter().zip(labels) {
        let with_s2 = rng.random_bool(spec.in_english_share);
        for (p, &label) in e.passages.iter().zip(ls) {
            let dissent = rng.random_bool(spec.dissent_rate);
            push(e, p, Scenario::InLanguage, three_votes(label, dissent, rng));
            if with_s2 {
                let s2_label = label != rng.random_bool(spec.in_english_flip_rate);
                let dissent = rng.random_bool(spec.dissent_rate);
                push(e, p, Scenario::InEnglish, three_votes(s2_label, dissent, rng));
            }
        }
    }
    out
}

/// Random archetype mix for property tests: `n` examples, each archetype
/// (and so each indicator) equally likely.
pub fn random_stratum(n: usize, rng: &mut impl Rng) -> StratumCounts {
    let mut counts = [0usize; 10];
    for _ in 0..n {
        counts[rng.random_range(0..10)] += 1;
    }
    StratumCounts::from_archetypes(counts)
}

fn counts(n: usize, v: [usize; 6]) -> StratumCounts {
    StratumCounts {
        n,
        top1_any: v[0],
        top1_lang: v[1],
        top1_en: v[2],
        all_any: v[3],
        all_lang: v[4],
        all_en: v[5],
    }
}

/// Per-language strata matching the reference attribution breakdown for
/// Bengali and Japanese. EM and non-EM strata alone cannot produce the
/// overall column, so part of each sample has no gold answer.
pub fn breakdown_specs() -> Vec<LanguageSpec> {
    let lang = |s: &str| LanguageCode::new(s).expect("static tag");
    vec![
        LanguageSpec {
            language: lang("bn"),
            exact_match: counts(55, [23, 23, 0, 37, 36, 0]),
            non_exact_match: counts(341, [86, 76, 9, 138, 123, 13]),
            no_gold: counts(84, [25, 21, 2, 44, 34, 3]),
            reranked: None,
        },
        LanguageSpec {
            language: lang("ja"),
            exact_match: counts(49, [11, 11, 0, 26, 25, 0]),
            non_exact_match: counts(97, [8, 8, 0, 23, 20, 3]),
            no_gold: counts(58, [5, 5, 0, 27, 26, 1]),
            reranked: None,
        },
    ]
}

/// AIS of exact-match answers over all passages, per language, in percent.
pub const EM_AIS_ALL: [(&str, f64); 5] = [("bn", 67.3), ("fi", 80.4), ("ja", 53.1), ("ru", 67.5), ("te", 93.1)];

/// EM-only strata of 1000 examples reproducing [`EM_AIS_ALL`].
pub fn em_ais_specs() -> Result<Vec<LanguageSpec>> {
    EM_AIS_ALL
        .iter()
        .map(|(l, all)| LanguageSpec::new(l, StratumCounts::from_proportions(1000, 0.0, all / 100.0)?))
        .collect()
}

/// Top-1, all-passages and reranked AIS per language, in percent.
pub const RERANK_TABLE: [(&str, f64, f64, f64); 5] = [
    ("bn", 27.9, 45.6, 39.2),
    ("fi", 38.7, 50.9, 46.0),
    ("ja", 11.8, 37.3, 29.1),
    ("ru", 27.5, 40.9, 39.6),
    ("te", 23.3, 31.7, 30.3),
];

/// 1000 examples per language realizing [`RERANK_TABLE`].
pub fn rerank_specs() -> Result<Vec<LanguageSpec>> {
    RERANK_TABLE
        .iter()
        .map(|(l, top1, all, reranked)| {
            let mut s = LanguageSpec::new(l, StratumCounts::from_proportions(1000, top1 / 100.0, all / 100.0)?)?;
            s.reranked = Some(count_for(reranked / 100.0, 1000, "reranked")?);
            Ok(s)
        })
        .collect()
}

/// A single passage judged by hand, with the string-match outcome expected
/// for it and the attribution label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandcraftedCase {
    pub example: Example,
    pub string_match_expected: bool,
    pub attributed: bool,
    pub note: String,
}

#[allow(clippy::too_many_arguments)]
fn case(
    id: &str,
    lang: &str,
    query: &str,
    answer: &str,
    gold: &[&str],
    answer_type: AnswerType,
    passage: &str,
    string_match_expected: bool,
    attributed: bool,
    note: &str,
) -> HandcraftedCase {
    let l = LanguageCode::new(lang).expect("static tag");
    HandcraftedCase {
        example: Example {
            example_id: id.into(),
            query: query.into(),
            query_language: l.clone(),
            answer: answer.into(),
            gold_answers: gold.iter().map(|g| g.to_string()).collect(),
            answer_type,
            passages: vec![Passage::new(format!("{id}-p1"), passage, l, 1).expect("static passage")],
            original: None,
        },
        string_match_expected,
        attributed,
        note: note.into(),
    }
}

/// Ten hand-labelled cases covering the string-match edge cases.
pub fn handcrafted() -> Vec<HandcraftedCase> {
    use AnswerType::{ShortSpan, YesNo};
    vec![
        case("hc-01", "fi", "Mikä on Kenian pääkaupunki?", "Nairobi", &["Nairobi"], ShortSpan,
            "Kenia on valtio Itä-Afrikassa, ja sen pääkaupunki on Nairobi.", true, true,
            "answer appears verbatim"),
        case("hc-02", "te", "How many people died in the Second World War?", "Six crores", &["70-85 millions"], ShortSpan,
            "The war was the deadliest in history and killed roughly six crore people.", false, true,
            "unit mismatch: attributed, but the answer string is not in the passage"),
        case("hc-03", "bn", "Which is the largest organ of the human body?", "the skin", &["the liver"], ShortSpan,
            "Covering the whole body, the skin is its largest organ and has two main layers.", true, true,
            "differs from the gold answer yet supported"),
        case("hc-04", "ja", "カール・マルクスは歴史家でしたか？", "はい", &["はい"], YesNo,
            "マルクス主義は、カール・マルクスとエンゲルスの思想を基礎とする社会主義の体系である。はい。", false, false,
            "yes/no answers always score 0"),
        case("hc-05", "bn", "What is the mother tongue of the Marma people?", "Burmese", &["Burmese"], ShortSpan,
            "Burmese is a Sino-Tibetan language spoken across Myanmar.", true, false,
            "string present but the passage never links it to the Marma"),
        case("hc-06", "fi", "Mikä on Suomen pääkaupunki?", "ＨＥＬＳＩＮＫＩ", &["Helsinki"], ShortSpan,
            "Helsinki on Suomen pääkaupunki.", true, true,
            "full-width and upper case fold to the passage text"),
        case("hc-07", "ru", "Кто написал роман «Война и мир»?", "Лев  Толстой", &["Лев Толстой"], ShortSpan,
            "Роман «Война и мир» написал Лев\nТолстой.", true, true,
            "whitespace runs collapse"),
        case("hc-08", "ru", "В каком году началась Отечественная война?", "1812", &["1812"], ShortSpan,
            "Заграничный поход русской армии начался в 1813 году.", false, false,
            "answer absent"),
        case("hc-09", "fi", "Mikä sana tarkoittaa katua saksaksi?", "STRASSE", &["Straße"], ShortSpan,
            "Saksan sana Straße tarkoittaa katua.", true, true,
            "full case folding maps ß to ss"),
        case("hc-10", "te", "Is Hyderabad the capital of Telangana?", "అవును", &["అవును"], YesNo,
            "హైదరాబాదు తెలంగాణ రాజధాని. అవును.", false, true,
            "yes/no answers score 0 even when supported"),
    ]
}

/// Small mixed-language dataset used by the end-to-end tests and the README.
pub fn bundled_spec() -> Result<SyntheticSpec> {
    let lang = |l: &str, n: usize, seed: u64| -> Result<LanguageSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = LanguageSpec::new(l, random_stratum(n, &mut rng))?;
        s.non_exact_match = random_stratum(n, &mut rng);
        s.reranked = Some((s.total().all_any + s.total().top1_any) / 2);
        Ok(s)
    };
    let mut spec = SyntheticSpec::new(vec![lang("bn", 12, 1)?, lang("fi", 10, 2)?, lang("ja", 14, 3)?]);
    spec.in_english_share = 0.5;
    spec.in_english_flip_rate = 0.1;
    Ok(spec)
}

pub const BUNDLED_SEED: u64 = 20240501;

/// Writes `examples.jsonl`, `ratings.jsonl`, `judgments.jsonl` and
/// `scores.jsonl` for `fixture` into `dir`.
pub fn write_fixture(fixture: &Fixture, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join("examples.jsonl"), &fixture.examples)?;
    write_jsonl(&dir.join("ratings.jsonl"), &fixture.ratings)?;
    write_jsonl(&dir.join("judgments.jsonl"), &fixture.judgments)?;
    write_jsonl(&dir.join("scores.jsonl"), &fixture.scores)
}

/// Three documents for negative mining: 12, 5 and 1 passages.
pub fn bundled_documents() -> Vec<MiningTask> {
    let doc = |doc_id: &str, lang: &str, query: &str, answer: &str, n: usize, positive: usize| MiningTask {
        doc_id: doc_id.into(),
        language: LanguageCode::new(lang).expect("static tag"),
        query: query.into(),
        answer: answer.into(),
        positive_passage_id: format!("{doc_id}-s{positive}"),
        passages: (1..=n)
            .map(|i| DocPassage {
                passage_id: format!("{doc_id}-s{i}"),
                text: if i == positive {
                    format!("Section {i} of {doc_id} states that the answer is {answer}.")
                } else {
                    format!("Section {i} of {doc_id} covers background material.")
                },
            })
            .collect(),
    };
    vec![
        doc("doc-fi", "fi", "Mikä on Suomen pääkaupunki?", "Helsinki", 12, 4),
        doc("doc-bn", "bn", "বাংলাদেশের রাজধানী কোথায়?", "ঢাকা", 5, 1),
        doc("doc-ja", "ja", "日本の首都はどこですか？", "東京", 1, 1),
    ]
}

/// Writes the bundled dataset, documents and handcrafted cases into `dir`.
pub fn write_bundled(dir: &Path) -> Result<()> {
    let fixture = build_synthetic(&bundled_spec()?, BUNDLED_SEED)?;
    write_fixture(&fixture, dir)?;
    write_jsonl(&dir.join("documents.jsonl"), &bundled_documents())?;
    write_jsonl(&dir.join("handcrafted.jsonl"), &handcrafted())
}

/// Intended label per (example, passage), for checking aggregation.
pub fn intended_labels(fixture: &Fixture) -> BTreeMap<(String, String), bool> {
    fixture
        .judgments
        .iter()
        .filter(|j| j.scenario == Scenario::InLanguage)
        .map(|j| ((j.example_id.clone(), j.passage_id.clone()), j.label))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{ais_tally, AisOptions, Pool, SubsetFilter};
    use crate::model::JudgmentIndex;

    fn tally(f: &Fixture, pool: Pool, subset: SubsetFilter) -> usize {
        let idx = JudgmentIndex::new(&f.judgments, Scenario::InLanguage);
        ais_tally(&f.examples, &idx, AisOptions::new(pool, subset)).attributed
    }

    #[test]
    fn proportions_to_counts() {
        let c = StratumCounts::from_proportions(1000, 0.279, 0.456).unwrap();
        assert_eq!((c.top1_any, c.all_any), (279, 456));
        let f = build_synthetic(&SyntheticSpec::new(vec![LanguageSpec::new("bn", c).unwrap()]), 1).unwrap();
        assert_eq!(tally(&f, Pool::Top1, SubsetFilter::Any), 279);
        assert_eq!(tally(&f, Pool::All, SubsetFilter::Any), 456);
    }

    #[test]
    fn one_of_two() {
        let c = StratumCounts::from_proportions(2, 0.5, 0.5).unwrap();
        assert_eq!(c.top1_any, 1);
        assert!(matches!(
            StratumCounts::from_proportions(3, 0.5, 0.5),
            Err(Error::Unrepresentable(_))
        ));
    }

    #[test]
    fn deterministic() {
        let spec = bundled_spec().unwrap();
        assert_eq!(build_synthetic(&spec, 5).unwrap(), build_synthetic(&spec, 5).unwrap());
        assert_ne!(build_synthetic(&spec, 5).unwrap(), build_synthetic(&spec, 6).unwrap());
    }

    #[test]
    fn archetype_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let c = random_stratum(rng.random_range(0..60), &mut rng);
            assert_eq!(StratumCounts::from_archetypes(c.archetypes().unwrap()), c);
        }
    }

    #[test]
    fn infeasible_counts_rejected() {
        let mut c = StratumCounts::from_proportions(10, 0.2, 0.5).unwrap();
        c.top1_en = 1;
        assert!(c.archetypes().is_err());
    }

    #[test]
    fn handcrafted_set_is_valid() {
        let cases = handcrafted();
        assert_eq!(cases.len(), 10);
        for c in &cases {
            c.example.validate().unwrap();
        }
    }
}
