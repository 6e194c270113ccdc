//! Training data for attribution detectors: positives from answer-bearing
//! passages, negatives sampled from other passages of the same document.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::LanguageCode;
use crate::scorer::build_prompt_parts;

/// Default number of negatives per document.
pub const DEFAULT_NEGATIVES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocPassage {
    pub passage_id: String,
    pub text: String,
}

/// One QA item with the full document that answers it (documents file format).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningTask {
    pub doc_id: String,
    pub language: LanguageCode,
    pub query: String,
    pub answer: String,
    pub positive_passage_id: String,
    pub passages: Vec<DocPassage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinedPair {
    pub query: String,
    pub answer: String,
    pub passage_id: String,
    pub passage: String,
    pub label: bool,
    pub source_document_id: String,
    pub language: LanguageCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MiningOutcome {
    /// The positive pair first, then negatives in document order.
    pub pairs: Vec<MinedPair>,
    pub warning: Option<String>,
}

/// Per-document seed so documents can be mined in any order.
pub fn derive_seed(global_seed: u64, doc_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(global_seed.to_le_bytes());
    h.update(doc_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Samples up to `k` negatives uniformly without replacement from the
/// passages of `task`'s document that differ from the positive in both id
/// and text.
pub fn mine_negatives(task: &MiningTask, k: usize, seed: u64) -> Result<MiningOutcome> {
    if k == 0 {
        return Err(Error::Config("number of negatives must be >= 1".into()));
    }
    let positive = task
        .passages
        .iter()
        .find(|p| p.passage_id == task.positive_passage_id)
        .ok_or_else(|| {
            Error::invalid(
                "positive_passage_id",
                format!(
                    "document {:?} has no passage {:?}",
                    task.doc_id, task.positive_passage_id
                ),
            )
        })?;
    let eligible: Vec<&DocPassage> = task
        .passages
        .iter()
        .filter(|p| p.passage_id != positive.passage_id && p.text != positive.text)
        .collect();
    let take = k.min(eligible.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, eligible.len(), take).into_vec();
    picked.sort_unstable();

    let pair = |p: &DocPassage, label: bool| MinedPair {
        query: task.query.clone(),
        answer: task.answer.clone(),
        passage_id: p.passage_id.clone(),
        passage: p.text.clone(),
        label,
        source_document_id: task.doc_id.clone(),
        language: task.language.clone(),
    };
    let mut pairs = Vec::with_capacity(take + 1);
    pairs.push(pair(positive, true));
    pairs.extend(picked.into_iter().map(|i| pair(eligible[i], false)));

    let warning = (take == 0).then(|| {
        let msg = format!("document {:?} has no passage usable as a negative", task.doc_id);
        log::warn!("{msg}");
        msg
    });
    Ok(MiningOutcome { pairs, warning })
}

/// Mines every task in parallel with seeds derived from `(global_seed, doc_id)`.
/// Output keeps task order.
pub fn mine_all(tasks: &[MiningTask], k: usize, global_seed: u64) -> Result<(Vec<MinedPair>, Vec<String>)> {
    let outcomes: Vec<MiningOutcome> = tasks
        .par_iter()
        .map(|t| mine_negatives(t, k, derive_seed(global_seed, &t.doc_id)))
        .collect::<Result<_>>()?;
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    for o in outcomes {
        pairs.extend(o.pairs);
        warnings.extend(o.warning);
    }
    Ok((pairs, warnings))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingRecord {
    pub premise: String,
    pub hypothesis: String,
    #[serde(with = "crate::model::bit")]
    pub label: bool,
    pub language: LanguageCode,
    pub doc_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingHeader {
    pub format: String,
    pub template_id: String,
    pub seed: u64,
    pub records: usize,
    pub positives: usize,
}

/// Instantiates the prompt for each pair and shuffles deterministically.
pub fn training_records(pairs: &[MinedPair], template_id: &str, seed: u64) -> Result<Vec<TrainingRecord>> {
    let mut records = pairs
        .iter()
        .map(|p| {
            let t = build_prompt_parts(&p.query, &p.answer, &p.passage, template_id)?;
            Ok(TrainingRecord {
                premise: t.premise,
                hypothesis: t.hypothesis,
                label: p.label,
                language: p.language.clone(),
                doc_id: p.source_document_id.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(records)
}

/// Renders the training file: a `{"header": ...}` line, then one record per pair.
pub fn render_training_file(pairs: &[MinedPair], template_id: &str, seed: u64) -> Result<String> {
    let records = training_records(pairs, template_id, seed)?;
    let header = TrainingHeader {
        format: "xattr-training/1".into(),
        template_id: template_id.to_owned(),
        seed,
        records: records.len(),
        positives: records.iter().filter(|r| r.label).count(),
    };
    let mut out = serde_json::json!({ "header": header }).to_string();
    out.push('\n');
    out.push_str(&crate::ingest::to_jsonl(&records));
    Ok(out)
}

pub fn emit_training_file(pairs: &[MinedPair], template_id: &str, seed: u64, path: &Path) -> Result<()> {
    let text = render_training_file(pairs, template_id, seed)?;
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}
