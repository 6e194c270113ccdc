//! Translation clients, a persistent content-addressed cache, and
//! translate-test preparation of examples.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::http::{JsonClient, RetryPolicy};
use crate::model::{Example, LanguageCode, OriginalQuery, OriginalText};
use crate::scorer::normalize;

pub trait TranslationClient: Send + Sync {
    /// Stable name used in cache keys; different backends never share entries.
    fn identity(&self) -> &str;
    fn translate(&self, text: &str, source: Option<&LanguageCode>, target: &LanguageCode)
        -> Result<String>;
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranslateRequest {
    pub text: String,
    pub source: Option<String>,
    pub target: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TranslateResponse {
    pub text: String,
}

/// `POST /v1/translate` client.
#[derive(Debug, Clone)]
pub struct HttpTranslationClient {
    http: JsonClient,
    identity: String,
}

impl HttpTranslationClient {
    pub fn new(endpoint: &str, retry: RetryPolicy) -> Result<Self> {
        let http = JsonClient::new(endpoint, retry)?;
        let identity = format!("http:{}", http.endpoint());
        Ok(HttpTranslationClient { http, identity })
    }
}

impl TranslationClient for HttpTranslationClient {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn translate(&self, text: &str, source: Option<&LanguageCode>, target: &LanguageCode) -> Result<String> {
        let req = TranslateRequest {
            text: text.to_owned(),
            source: source.map(|s| s.as_str().to_owned()),
            target: target.as_str().to_owned(),
        };
        let resp: TranslateResponse = self.http.post("/v1/translate", &req)?;
        Ok(resp.text)
    }
}

/// Offline stand-in: returns the input prefixed with `[mt:<src>><tgt>] `.
#[derive(Debug, Default)]
pub struct MockTranslationClient {
    calls: AtomicUsize,
}

impl MockTranslationClient {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn marker(source: Option<&LanguageCode>, target: &LanguageCode) -> String {
        format!("[mt:{}>{}] ", source.map_or("auto", |s| s.as_str()), target)
    }
}

impl TranslationClient for MockTranslationClient {
    fn identity(&self) -> &str {
        "mock"
    }

    fn translate(&self, text: &str, source: Option<&LanguageCode>, target: &LanguageCode) -> Result<String> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        Ok(format!("{}{text}", Self::marker(source, target)))
    }
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    text: String,
}

/// Content-addressed translation cache, optionally backed by an append-only file.
#[derive(Default)]
pub struct TranslationCache {
    entries: RwLock<HashMap<String, String>>,
    file: Option<Mutex<File>>,
    path: Option<PathBuf>,
}

impl TranslationCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) a cache file and loads every entry in it.
    pub fn open(path: &Path) -> Result<Self> {
        let mut entries = HashMap::new();
        if path.exists() {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match serde_json::from_str::<CacheLine>(&line) {
                    Ok(l) => {
                        entries.insert(l.key, l.text);
                    }
                    Err(e) => log::warn!("{}:{}: skipping bad cache line: {e}", path.display(), i + 1),
                }
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(TranslationCache {
            entries: RwLock::new(entries),
            file: Some(Mutex::new(file)),
            path: Some(path.to_owned()),
        })
    }

    pub fn key(text: &str, source: Option<&LanguageCode>, target: &LanguageCode, client: &str) -> String {
        let mut h = Sha256::new();
        for part in [
            normalize(text).as_str(),
            source.map_or("", |s| s.as_str()),
            target.as_str(),
            client,
        ] {
            h.update(part.as_bytes());
            h.update([0x1f]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.entries.read().expect("cache lock").get(key).cloned()
    }

    pub fn insert(&self, key: String, text: String) -> Result<()> {
        if let (Some(file), Some(path)) = (&self.file, &self.path) {
            let line = serde_json::to_string(&CacheLine {
                key: key.clone(),
                text: text.clone(),
            })
            .expect("cache line serializes");
            let mut f = file.lock().expect("cache file lock");
            writeln!(f, "{line}").map_err(|e| Error::io(path, e))?;
        }
        self.entries.write().expect("cache lock").insert(key, text);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A translation client fronted by a cache.
pub struct Translator {
    client: Arc<dyn TranslationClient>,
    cache: TranslationCache,
}

impl Translator {
    pub fn new(client: Arc<dyn TranslationClient>, cache: TranslationCache) -> Self {
        Translator { client, cache }
    }

    pub fn cache(&self) -> &TranslationCache {
        &self.cache
    }

    /// Identity when `source == target`; otherwise served from the cache or
    /// the client, in that order.
    pub fn translate(&self, text: &str, source: Option<&LanguageCode>, target: &LanguageCode) -> Result<String> {
        if source == Some(target) {
            return Ok(text.to_owned());
        }
        let key = TranslationCache::key(text, source, target, self.client.identity());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit);
        }
        let out = self.client.translate(text, source, target)?;
        self.cache.insert(key, out.clone())?;
        Ok(out)
    }
}

/// Free-function form that reports a missing client as a configuration error.
pub fn translate(
    text: &str,
    source: Option<&LanguageCode>,
    target: &LanguageCode,
    translator: Option<&Translator>,
) -> Result<String> {
    if source == Some(target) {
        return Ok(text.to_owned());
    }
    translator
        .ok_or_else(|| Error::Config("no translation client configured".into()))?
        .translate(text, source, target)
}

/// Translates the query side and every passage not already in `target`.
///
/// Original text and language are kept on the example and on each
/// translated passage; ranks are untouched. Applying it twice is the same as
/// applying it once. Any client error aborts the whole example.
pub fn translate_example_for_test(
    e: &Example,
    target: &LanguageCode,
    translator: &Translator,
) -> Result<Example> {
    let mut out = e.clone();
    if &e.query_language != target {
        let src = Some(&e.query_language);
        out.query = translator.translate(&e.query, src, target)?;
        out.answer = translator.translate(&e.answer, src, target)?;
        out.gold_answers = e
            .gold_answers
            .iter()
            .map(|g| translator.translate(g, src, target))
            .collect::<Result<_>>()?;
        out.query_language = target.clone();
        if out.original.is_none() {
            out.original = Some(OriginalQuery {
                language: e.query_language.clone(),
                query: e.query.clone(),
                answer: e.answer.clone(),
                gold_answers: e.gold_answers.clone(),
            });
        }
    }
    for p in out.passages.iter_mut() {
        if &p.language == target {
            continue;
        }
        let text = translator.translate(&p.text, Some(&p.language), target)?;
        if p.original.is_none() {
            p.original = Some(OriginalText {
                language: p.language.clone(),
                text: std::mem::take(&mut p.text),
            });
        }
        p.text = text;
        p.language = target.clone();
        p.translated = true;
    }
    Ok(out)
}
