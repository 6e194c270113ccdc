//! Command-line front end. Option values come from flags, then the
//! `--config` TOML file, then `XATTR_*` environment variables.

use std::collections::{BTreeMap, HashMap};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::aggregate::{aggregate_all, agreement_by_language, collection_counts, scenario_disagreement, translated_from_english};
use crate::error::{Error, Result};
use crate::evaluate::{
    by_language, calibrate_by_language, calibrate_global, evaluate, rerank_report, EvalInputs, ThresholdMode,
    ThresholdsFile,
};
use crate::http::RetryPolicy;
use crate::ingest::{load_examples_with, load_jsonl, load_judgments, load_ratings, write_jsonl, Dataset, Lexicon};
use crate::metrics::{ais_tally, AisOptions, Pool, SubsetFilter, Top1Mode};
use crate::mine::{emit_training_file, mine_all, MiningTask, DEFAULT_NEGATIVES};
use crate::model::{AttributionJudgment, EvalReport, Example, JudgmentIndex, Scenario};
use crate::report::{write_report, Format};
use crate::rerank::{group_scores, rerank_all};
use crate::scorer::{build_scorer, score_examples, MockMode, ScoreRecord, ScorerContext, ScorerKind, ScorerSpec, NLI_TEMPLATE};
use crate::translate::{HttpTranslationClient, MockTranslationClient, TranslationCache, TranslationClient, Translator};

pub const ENV_SCORER_ENDPOINT: &str = "XATTR_SCORER_ENDPOINT";
pub const ENV_TRANSLATE_ENDPOINT: &str = "XATTR_TRANSLATE_ENDPOINT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScorerArg {
    StringMatch,
    #[value(name = "string-match-tt")]
    #[serde(rename = "string-match-tt")]
    StringMatchTt,
    Remote,
    Mock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioArg {
    #[value(name = "in_language")]
    InLanguage,
    #[value(name = "in_english")]
    InEnglish,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetArg {
    Any,
    Lang,
    En,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolArg {
    Top1,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Top1ModeArg {
    WithinSubset,
    Overall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatArg {
    Tsv,
    Md,
}

/// Every option, shared by flags and the config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Examples JSONL.
    #[arg(long, global = true)]
    pub examples: Option<PathBuf>,
    /// Rater records JSONL.
    #[arg(long, global = true)]
    pub ratings: Option<PathBuf>,
    /// Aggregated judgments JSONL.
    #[arg(long, global = true)]
    pub judgments: Option<PathBuf>,
    /// Scores JSONL as written by `score`.
    #[arg(long, global = true)]
    pub scores: Option<PathBuf>,
    /// Documents JSONL for `mine`.
    #[arg(long, global = true)]
    pub documents: Option<PathBuf>,
    /// Yes/no lexicon JSON replacing the bundled one.
    #[arg(long, global = true)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub scorer: Option<ScorerArg>,
    /// Scoring service base URL.
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Translation service base URL, or `mock` for the offline marker client.
    #[arg(long, global = true)]
    pub translate_endpoint: Option<String>,
    /// Translation cache file (JSONL); defaults to `<out>/translation_cache.jsonl`.
    #[arg(long, global = true)]
    pub translation_cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub scenario: Option<ScenarioArg>,
    #[arg(long, global = true, value_enum)]
    pub subset: Option<SubsetArg>,
    #[arg(long, global = true, value_enum)]
    pub pool: Option<PoolArg>,
    #[arg(long, global = true, value_enum)]
    pub top1_mode: Option<Top1ModeArg>,
    /// Fixed decision threshold for every language.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    /// Thresholds JSON as written by `calibrate`.
    #[arg(long, global = true)]
    pub thresholds: Option<PathBuf>,
    /// Calibrate one threshold over all languages instead of one per language.
    #[arg(long, global = true)]
    pub global_threshold: bool,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Report JSON for `report`.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Prompt template id.
    #[arg(long, global = true)]
    pub template: Option<String>,
    /// Negatives per document for `mine`.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Mock scorer mode: hash, oracle, noisy:<eps> or constant:<v>.
    #[arg(long, global = true)]
    pub mock_mode: Option<String>,
}

impl Options {
    /// Fields set here win; unset ones fall back to `other`.
    pub fn or(self, other: Options) -> Options {
        macro_rules! pick {
            ($($f:ident),*) => { Options { $($f: self.$f.or(other.$f),)* global_threshold: self.global_threshold || other.global_threshold } };
        }
        pick!(
            examples, ratings, judgments, scores, documents, lexicon, scorer, endpoint, translate_endpoint,
            translation_cache, scenario, subset, pool, top1_mode, threshold, thresholds, seed, jobs, out, format,
            input, template, k, mock_mode
        )
    }

    fn from_env() -> Options {
        Options {
            endpoint: std::env::var(ENV_SCORER_ENDPOINT).ok(),
            translate_endpoint: std::env::var(ENV_TRANSLATE_ENDPOINT).ok(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "xattr", version, about = "Attribution evaluation for cross-lingual question answering")]
pub struct Cli {
    /// TOML file with default option values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub options: Options,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Validate examples (and ratings) and write them normalized.
    Ingest,
    /// Majority-vote ratings into judgments.
    Aggregate,
    /// Rater agreement and scenario disagreement per language.
    Agreement,
    /// Score every (example, passage) pair.
    Score,
    /// Pick decision thresholds from scores and judgments.
    Calibrate,
    /// Compute the full per-language report.
    Evaluate,
    /// Rerank passages by score and report the AIS gain.
    Rerank,
    /// Build an attribution-detection training file from documents.
    Mine,
    /// Render a report JSON as TSV or Markdown.
    Report,
}

/// Parses arguments, runs the command and returns the process exit code.
/// Errors are printed to stderr.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(hint) = hint(&e) {
                eprintln!("hint: {hint}");
            }
            1
        }
    }
}

fn hint(e: &Error) -> Option<&'static str> {
    match e {
        Error::Transport { .. } => Some(
            "is the service running? set --endpoint, the config file, or XATTR_SCORER_ENDPOINT / XATTR_TRANSLATE_ENDPOINT",
        ),
        Error::Schema { .. } => Some("the record does not match the documented JSONL schema"),
        Error::Io { .. } => Some("check the path and permissions"),
        Error::ScoreOutOfRange { .. } => Some("scoring services must return probabilities in [0, 1]"),
        _ => None,
    }
}

pub fn load_config(path: &Path) -> Result<Options> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => load_config(p)?,
        None => Options::default(),
    };
    let o = cli.options.or(file).or(Options::from_env());
    match cli.command {
        Command::Ingest => ingest(&o),
        Command::Aggregate => aggregate(&o),
        Command::Agreement => agreement(&o),
        Command::Score => score(&o),
        Command::Calibrate => calibrate(&o),
        Command::Evaluate => evaluate_cmd(&o),
        Command::Rerank => rerank_cmd(&o),
        Command::Mine => mine(&o),
        Command::Report => report(&o),
    }
}

fn need<'a, T>(v: &'a Option<T>, flag: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("missing --{flag} (or `{}` in the config file)", flag.replace('-', "_"))))
}

fn out_dir(o: &Options) -> Result<PathBuf> {
    let dir = o.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn scenario(o: &Options) -> Scenario {
    match o.scenario {
        Some(ScenarioArg::InEnglish) => Scenario::InEnglish,
        _ => Scenario::InLanguage,
    }
}

fn top1_mode(o: &Options) -> Top1Mode {
    match o.top1_mode {
        Some(Top1ModeArg::Overall) => Top1Mode::Overall,
        _ => Top1Mode::WithinSubset,
    }
}

/// Sorted by (language, example_id) so every output is order-independent.
fn load_examples(o: &Options) -> Result<Vec<Example>> {
    let lexicon = match &o.lexicon {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::bundled(),
    };
    let loaded = load_examples_with(need(&o.examples, "examples")?, &lexicon)?;
    let mut examples = loaded.examples;
    sort_examples(&mut examples);
    Ok(examples)
}

pub fn sort_examples(examples: &mut [Example]) {
    examples.sort_by(|a, b| {
        (a.source_language(), &a.example_id).cmp(&(b.source_language(), &b.example_id))
    });
}

/// Judgments from `--judgments`, or aggregated from `--ratings`.
fn load_or_aggregate(o: &Options) -> Result<Vec<AttributionJudgment>> {
    match (&o.judgments, &o.ratings) {
        (Some(j), _) => load_judgments(j),
        (None, Some(r)) => Ok(aggregate_all(&load_ratings(r)?)?.judgments),
        (None, None) => Err(Error::Config("missing --judgments (or --ratings to aggregate)".into())),
    }
}

fn ingest(o: &Options) -> Result<()> {
    let lexicon = match &o.lexicon {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::bundled(),
    };
    let loaded = load_examples_with(need(&o.examples, "examples")?, &lexicon)?;
    let ratings = match &o.ratings {
        Some(p) => load_ratings(p)?,
        None => Vec::new(),
    };
    let mut ds = Dataset::new(loaded.examples, ratings, BTreeMap::new())?;
    sort_examples(&mut ds.examples);
    let dir = out_dir(o)?;
    write_jsonl(&dir.join("examples.jsonl"), &ds.examples)?;
    let per_lang: BTreeMap<String, usize> =
        by_language(&ds.examples).into_iter().map(|(l, v)| (l.to_string(), v.len())).collect();
    write_json(
        &dir.join("ingest.json"),
        &json!({
            "examples": ds.examples.len(),
            "ratings": ds.ratings.len(),
            "inferred_answer_types": loaded.inferred_answer_types,
            "languages": per_lang,
        }),
    )
}

fn aggregate(o: &Options) -> Result<()> {
    let ratings = load_ratings(need(&o.ratings, "ratings")?)?;
    let agg = aggregate_all(&ratings)?;
    let dir = out_dir(o)?;
    write_jsonl(&dir.join("judgments.jsonl"), &agg.judgments)?;
    let excluded: Vec<_> = agg
        .excluded
        .iter()
        .map(|(s, k)| json!({"scenario": s, "example_id": k.example_id, "passage_id": k.passage_id}))
        .collect();
    write_jsonl(&dir.join("excluded.jsonl"), &excluded)?;
    println!("{} judgments, {} excluded triples", agg.judgments.len(), agg.excluded.len());
    Ok(())
}

fn agreement(o: &Options) -> Result<()> {
    let examples = load_examples(o)?;
    let ratings = load_ratings(need(&o.ratings, "ratings")?)?;
    let judgments = match &o.judgments {
        Some(p) => load_judgments(p)?,
        None => aggregate_all(&ratings)?.judgments,
    };
    let mut langs: BTreeMap<String, serde_json::Value> = BTreeMap::new();
    let mut per_scenario = BTreeMap::new();
    for s in [Scenario::InLanguage, Scenario::InEnglish] {
        per_scenario.insert(
            s,
            (
                agreement_by_language(&examples, &judgments, &ratings, s),
                collection_counts(&examples, &judgments, s),
            ),
        );
    }
    for (lang, group) in by_language(&examples) {
        let ids: std::collections::HashSet<&str> = group.iter().map(|e| e.example_id.as_str()).collect();
        let pick = |s: Scenario| -> Vec<AttributionJudgment> {
            judgments.iter().filter(|j| j.scenario == s && ids.contains(j.example_id.as_str())).cloned().collect()
        };
        let (s1, s2) = (pick(Scenario::InLanguage), pick(Scenario::InEnglish));
        let translated = translated_from_english(&group);
        let mut entry = serde_json::Map::new();
        for (s, (agree, counts)) in &per_scenario {
            entry.insert(
                s.to_string(),
                json!({
                    "agreement_with_consensus": agree.get(&lang).copied().flatten(),
                    "unique_queries": counts.get(&lang).map_or(0, |c| c.unique_queries),
                    "triples": counts.get(&lang).map_or(0, |c| c.triples),
                }),
            );
        }
        entry.insert("s1_vs_s2".into(), json!(scenario_disagreement(&s1, &s2, None).ok()));
        entry.insert("s1_vs_s2_translated".into(), json!(scenario_disagreement(&s1, &s2, Some(&translated)).ok()));
        langs.insert(lang.to_string(), serde_json::Value::Object(entry));
    }
    write_json(&out_dir(o)?.join("agreement.json"), &json!({ "languages": langs }))
}

pub fn parse_mock_mode(s: &str) -> Result<MockMode> {
    let bad = || Error::Config(format!("bad --mock-mode {s:?}; expected hash, oracle, noisy:<eps> or constant:<v>"));
    let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
    match s.split_once(':') {
        None if s == "hash" => Ok(MockMode::Hash),
        None if s == "oracle" => Ok(MockMode::Oracle),
        Some(("noisy", v)) => Ok(MockMode::NoisyOracle(num(v)?)),
        Some(("constant", v)) => Ok(MockMode::Constant(num(v)?)),
        _ => Err(bad()),
    }
}

fn translator(o: &Options, dir: &Path) -> Result<Option<Arc<Translator>>> {
    let Some(endpoint) = &o.translate_endpoint else { return Ok(None) };
    let client: Arc<dyn TranslationClient> = if endpoint == "mock" {
        Arc::new(MockTranslationClient::new())
    } else {
        Arc::new(HttpTranslationClient::new(endpoint, RetryPolicy::default())?)
    };
    let cache_path = o.translation_cache.clone().unwrap_or_else(|| dir.join("translation_cache.jsonl"));
    Ok(Some(Arc::new(Translator::new(client, TranslationCache::open(&cache_path)?))))
}

/// Scores `examples` with the configured scorer, writing `scores.jsonl`.
fn run_scorer(o: &Options, examples: &[Example], dir: &Path) -> Result<Vec<ScoreRecord>> {
    let arg = *need(&o.scorer, "scorer")?;
    let (kind, name) = match arg {
        ScorerArg::StringMatch => (ScorerKind::StringMatch, "string-match"),
        ScorerArg::StringMatchTt => (ScorerKind::StringMatchTranslateTest, "string-match-tt"),
        ScorerArg::Remote => (ScorerKind::RemoteEntailment, "remote"),
        ScorerArg::Mock => (ScorerKind::Mock, "mock"),
    };
    let mut spec = ScorerSpec::new(name, kind);
    spec.endpoint = o.endpoint.clone();
    spec.template_id = o.template.clone().unwrap_or_else(|| NLI_TEMPLATE.to_owned());
    spec.seed = Some(o.seed.unwrap_or(0));
    if let Some(m) = &o.mock_mode {
        spec.mock_mode = parse_mock_mode(m)?;
    }
    let judgments = match (&o.judgments, &o.ratings) {
        (None, None) => None,
        _ => Some(Arc::new(JudgmentIndex::new(&load_or_aggregate(o)?, scenario(o)))),
    };
    let ctx = ScorerContext {
        judgments,
        translator: translator(o, dir)?,
        retry: RetryPolicy::default(),
    };
    let scorer = build_scorer(&spec, &ctx)?;
    let jobs = o.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let (records, failures) = score_examples(scorer.as_ref(), examples, jobs);
    write_jsonl(&dir.join("scores.jsonl"), &records)?;
    let failed = failures.len();
    if let Some(first) = failures.into_iter().next() {
        eprintln!(
            "{failed} of {} pairs failed to score; first failure at ({}, {})",
            failed + records.len(),
            first.example_id,
            first.passage_id
        );
        return Err(first.error);
    }
    Ok(records)
}

fn score(o: &Options) -> Result<()> {
    let examples = load_examples(o)?;
    let dir = out_dir(o)?;
    let records = run_scorer(o, &examples, &dir)?;
    println!("scored {} pairs", records.len());
    Ok(())
}

fn load_scores(o: &Options) -> Result<HashMap<String, Vec<crate::model::ScoredPassage>>> {
    let records: Vec<ScoreRecord> = load_jsonl(need(&o.scores, "scores")?)?;
    group_scores(&records)
}

fn calibrate(o: &Options) -> Result<()> {
    let examples = load_examples(o)?;
    let index = JudgmentIndex::new(&load_or_aggregate(o)?, scenario(o));
    let scores = load_scores(o)?;
    let file = if o.global_threshold {
        ThresholdsFile {
            global: Some(calibrate_global(&examples, &index, &scores)?),
            languages: BTreeMap::new(),
        }
    } else {
        ThresholdsFile {
            global: None,
            languages: calibrate_by_language(&examples, &index, &scores)?,
        }
    };
    write_json(&out_dir(o)?.join("thresholds.json"), &file)
}

fn threshold_mode(o: &Options, inputs: &EvalInputs<'_>) -> Result<ThresholdMode> {
    if let Some(t) = o.threshold {
        return Ok(ThresholdMode::Global(t));
    }
    if let Some(p) = &o.thresholds {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let file: ThresholdsFile =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
        return Ok(file.mode());
    }
    if o.global_threshold {
        if let Some(scores) = inputs.scores {
            let index = JudgmentIndex::new(inputs.judgments, inputs.scenario);
            return Ok(ThresholdMode::Global(calibrate_global(inputs.examples, &index, scores)?.threshold));
        }
    }
    Ok(ThresholdMode::PerLanguage)
}

fn subset(o: &Options) -> SubsetFilter {
    match o.subset {
        Some(SubsetArg::Lang) => SubsetFilter::InLanguage,
        Some(SubsetArg::En) => SubsetFilter::EnglishExclusive,
        _ => SubsetFilter::Any,
    }
}

fn pool(o: &Options) -> Pool {
    match o.pool {
        Some(PoolArg::Top1) => Pool::Top1,
        _ => Pool::All,
    }
}

fn evaluate_cmd(o: &Options) -> Result<()> {
    let examples = load_examples(o)?;
    let judgments = load_or_aggregate(o)?;
    let ratings = o.ratings.as_deref().map(load_ratings).transpose()?;
    let dir = out_dir(o)?;
    let (scores, scorer_name) = match (&o.scores, &o.scorer) {
        (Some(_), _) => {
            let records: Vec<ScoreRecord> = load_jsonl(o.scores.as_deref().expect("checked"))?;
            let name = records.first().map(|r| r.scorer.clone());
            (Some(group_scores(&records)?), name)
        }
        (None, Some(_)) => {
            let records = run_scorer(o, &examples, &dir)?;
            let name = records.first().map(|r| r.scorer.clone());
            (Some(group_scores(&records)?), name)
        }
        (None, None) => (None, None),
    };
    let mut inputs = EvalInputs::new(&examples, &judgments, scenario(o));
    inputs.ratings = ratings.as_deref();
    inputs.scores = scores.as_ref();
    inputs.scorer = scorer_name.as_deref();
    inputs.top1_mode = top1_mode(o);
    let mode = threshold_mode(o, &inputs)?;
    let report = evaluate(inputs, &mode)?;

    let index = JudgmentIndex::new(&judgments, scenario(o));
    let opts = AisOptions {
        pool: pool(o),
        subset: subset(o),
        top1_mode: top1_mode(o),
    };
    for (lang, group) in by_language(&examples) {
        let t = ais_tally(&group, &index, opts);
        let pct = t.percentage().map_or_else(|_| "-".to_owned(), |v| format!("{v:.1}"));
        println!("{lang}\tAIS={pct}\tevaluated={}\texcluded={}", t.evaluated, t.excluded.len());
    }
    write_json(&dir.join("report.json"), &report)
}

fn rerank_cmd(o: &Options) -> Result<()> {
    let examples = load_examples(o)?;
    let judgments = load_or_aggregate(o)?;
    let scores = load_scores(o)?;
    let choices = rerank_all(&examples, &scores)?;
    let dir = out_dir(o)?;
    write_jsonl(&dir.join("reranked.jsonl"), &choices)?;
    let report = rerank_report(&examples, &judgments, scenario(o), &scores, top1_mode(o))?;
    write_json(&dir.join("rerank.json"), &report)
}

fn mine(o: &Options) -> Result<()> {
    let tasks: Vec<MiningTask> = load_jsonl(need(&o.documents, "documents")?)?;
    let seed = o.seed.unwrap_or(0);
    let (pairs, warnings) = mine_all(&tasks, o.k.unwrap_or(DEFAULT_NEGATIVES), seed)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let path = out_dir(o)?.join("training.jsonl");
    emit_training_file(&pairs, o.template.as_deref().unwrap_or(NLI_TEMPLATE), seed, &path)?;
    println!("wrote {} ({} pairs)", path.display(), pairs.len());
    Ok(())
}

fn report(o: &Options) -> Result<()> {
    let input = need(&o.input, "input")?;
    let text = std::fs::read_to_string(input).map_err(|e| Error::io(input, e))?;
    let report: EvalReport =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", input.display())))?;
    report.validate()?;
    let format = match o.format {
        Some(FormatArg::Md) => Format::Markdown,
        _ => Format::Tsv,
    };
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    let path = out_dir(o)?.join(format!("{stem}.{}", format.extension()));
    write_report(&report, format, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_config_beat_env() {
        let flags = Options {
            endpoint: Some("http://flag".into()),
            ..Default::default()
        };
        let file: Options = toml::from_str("endpoint = \"http://file\"\nseed = 4\njobs = 2").unwrap();
        let env = Options {
            endpoint: Some("http://env".into()),
            translate_endpoint: Some("http://env-mt".into()),
            seed: Some(9),
            ..Default::default()
        };
        let o = flags.or(file).or(env);
        assert_eq!(o.endpoint.as_deref(), Some("http://flag"));
        assert_eq!(o.seed, Some(4));
        assert_eq!(o.translate_endpoint.as_deref(), Some("http://env-mt"));
    }

    #[test]
    fn unknown_config_key_rejected() {
        assert!(toml::from_str::<Options>("endpiont = \"x\"").is_err());
    }

    #[test]
    fn config_enums_use_flag_spelling() {
        let o: Options = toml::from_str("scorer = \"string-match-tt\"\nscenario = \"in_english\"\nformat = \"md\"").unwrap();
        assert_eq!(o.scorer, Some(ScorerArg::StringMatchTt));
        assert_eq!(o.scenario, Some(ScenarioArg::InEnglish));
        assert_eq!(o.format, Some(FormatArg::Md));
    }

    #[test]
    fn mock_modes() {
        assert_eq!(parse_mock_mode("noisy:0.25").unwrap(), MockMode::NoisyOracle(0.25));
        assert_eq!(parse_mock_mode("constant:0.5").unwrap(), MockMode::Constant(0.5));
        assert!(parse_mock_mode("noisy").is_err());
    }

    #[test]
    fn missing_command_is_usage_error() {
        assert_eq!(main_with(["xattr"]), 2);
        assert_eq!(main_with(["xattr", "evaluate", "--bogus"]), 2);
    }
}
