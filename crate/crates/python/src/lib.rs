//! Python bindings. Structured inputs and outputs cross the boundary as JSON
//! strings in the same formats the CLI reads and writes.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use xattr_core::aggregate::aggregate_all;
use xattr_core::ingest::{parse_examples, parse_ratings, to_jsonl, Lexicon};
use xattr_core::metrics;
use xattr_core::mine::{self, MiningTask};
use xattr_core::rerank;
use xattr_core::scorer::{self, build_prompt_parts};

fn py_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_json<T: serde::Serialize>(value: &T) -> PyResult<String> {
    serde_json::to_string(value).map_err(py_err)
}

#[pyfunction]
fn normalize(text: &str) -> String {
    scorer::normalize(text)
}

#[pyfunction]
fn exact_match(answer: &str, gold_answers: Vec<String>) -> PyResult<bool> {
    metrics::exact_match(answer, &gold_answers).map_err(py_err)
}

/// Validates one example (a JSON object) and returns it re-serialized with
/// the answer type filled in.
#[pyfunction]
fn validate_example(example_json: &str) -> PyResult<String> {
    let line = serde_json::from_str::<serde_json::Value>(example_json)
        .map_err(py_err)?
        .to_string();
    let loaded = parse_examples("<python>", &line, &Lexicon::bundled()).map_err(py_err)?;
    match loaded.examples.as_slice() {
        [e] => to_json(e),
        _ => Err(py_err("expected exactly one example")),
    }
}

/// String-match score of every passage of the example, in rank order.
#[pyfunction]
fn string_match_scores(example_json: &str) -> PyResult<Vec<f64>> {
    let e: xattr_core::model::Example = serde_json::from_str(&validate_example(example_json)?).map_err(py_err)?;
    Ok(e.passages.iter().map(|p| scorer::string_match_score(&e, p)).collect())
}

/// Returns `(premise, hypothesis)`.
#[pyfunction]
#[pyo3(signature = (query, answer, passage, template_id = "nli"))]
fn build_prompt(query: &str, answer: &str, passage: &str, template_id: &str) -> PyResult<(String, String)> {
    let t = build_prompt_parts(query, answer, passage, template_id).map_err(py_err)?;
    Ok((t.premise, t.hypothesis))
}

#[pyfunction]
fn roc_auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    metrics::roc_auc(&scores, &labels).map_err(py_err)
}

/// Returns `(threshold, accuracy)`.
#[pyfunction]
fn calibrate_threshold(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<(f64, f64)> {
    let c = metrics::calibrate_threshold(&scores, &labels).map_err(py_err)?;
    Ok((c.threshold, c.accuracy))
}

#[pyfunction]
fn accuracy_at(scores: Vec<f64>, labels: Vec<bool>, threshold: f64) -> PyResult<f64> {
    metrics::accuracy_at(&scores, &labels, threshold).map_err(py_err)
}

#[pyfunction]
fn relative_improvement(before: f64, after: f64) -> PyResult<f64> {
    rerank::relative_improvement(before, after).map_err(py_err)
}

/// Majority vote over a ratings JSONL string; returns judgments as JSONL.
#[pyfunction]
fn aggregate_ratings(ratings_jsonl: &str) -> PyResult<String> {
    let ratings = parse_ratings("<python>", ratings_jsonl).map_err(py_err)?;
    Ok(to_jsonl(&aggregate_all(&ratings).map_err(py_err)?.judgments))
}

/// Positive plus up to `k` sampled negatives for one document record, as JSONL.
#[pyfunction]
#[pyo3(signature = (task_json, k = mine::DEFAULT_NEGATIVES, seed = 0))]
fn mine_negatives(task_json: &str, k: usize, seed: u64) -> PyResult<String> {
    let task: MiningTask = serde_json::from_str(task_json).map_err(py_err)?;
    let outcome = mine::mine_negatives(&task, k, seed).map_err(py_err)?;
    Ok(to_jsonl(&outcome.pairs))
}

#[pymodule]
fn xattr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(exact_match, m)?)?;
    m.add_function(wrap_pyfunction!(validate_example, m)?)?;
    m.add_function(wrap_pyfunction!(string_match_scores, m)?)?;
    m.add_function(wrap_pyfunction!(build_prompt, m)?)?;
    m.add_function(wrap_pyfunction!(roc_auc, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy_at, m)?)?;
    m.add_function(wrap_pyfunction!(relative_improvement, m)?)?;
    m.add_function(wrap_pyfunction!(aggregate_ratings, m)?)?;
    m.add_function(wrap_pyfunction!(mine_negatives, m)?)?;
    Ok(())
}
