#![allow(dead_code)]

use std::path::{Path, PathBuf};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn bundled_dir() -> PathBuf {
    manifest_dir().join("fixtures/bundled")
}

pub fn golden_dir() -> PathBuf {
    manifest_dir().join("fixtures/golden")
}

/// Set `XATTR_BLESS=1` to rewrite committed golden files from the current output.
pub fn blessing() -> bool {
    std::env::var_os("XATTR_BLESS").is_some()
}

/// Compares `actual` with the committed file, or rewrites it when blessing.
pub fn check_golden(path: &Path, actual: &str) {
    if blessing() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with XATTR_BLESS=1 to create)", path.display()));
    if expected != actual {
        let line = expected
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or_else(|| "length".to_owned(), |i| format!("line {}", i + 1));
        panic!("{} differs from the current output at {line}", path.display());
    }
}

use std::collections::{BTreeMap, HashMap};

use xattr_core::fixtures::StratumCounts;
use xattr_core::model::{AttributionJudgment, Example, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stratum {
    Em,
    NonEm,
    NoGold,
}

fn loose(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Recounts the six AIS indicators per (language, stratum) straight from the
/// judgment list. Deliberately shares no code with the library metrics.
pub fn recount(
    examples: &[Example],
    judgments: &[AttributionJudgment],
    scenario: Scenario,
) -> BTreeMap<(String, Stratum), StratumCounts> {
    let mut labels: HashMap<(&str, &str), bool> = HashMap::new();
    for j in judgments.iter().filter(|j| j.scenario == scenario) {
        labels.insert((j.example_id.as_str(), j.passage_id.as_str()), j.label);
    }
    let mut out: BTreeMap<(String, Stratum), StratumCounts> = BTreeMap::new();
    for e in examples {
        let stratum = if e.gold_answers.is_empty() {
            Stratum::NoGold
        } else if e.gold_answers.iter().any(|g| loose(g) == loose(&e.answer)) {
            Stratum::Em
        } else {
            Stratum::NonEm
        };
        let lang = e.query_language.as_str();
        let yes = |i: usize| labels[&(e.example_id.as_str(), e.passages[i].passage_id.as_str())];
        let is_lang = |i: usize| e.passages[i].language.as_str() == lang;
        let is_en = |i: usize| e.passages[i].language.as_str() == "en";
        let idx: Vec<usize> = (0..e.passages.len()).collect();
        let first = |f: &dyn Fn(usize) -> bool| idx.iter().copied().find(|&i| f(i));
        let lang_yes = idx.iter().any(|&i| is_lang(i) && yes(i));
        let c = out.entry((lang.to_owned(), stratum)).or_default();
        c.n += 1;
        c.top1_any += usize::from(!idx.is_empty() && yes(0));
        c.top1_lang += usize::from(first(&is_lang).is_some_and(yes));
        c.top1_en += usize::from(first(&is_en).is_some_and(yes) && !lang_yes);
        c.all_any += usize::from(idx.iter().any(|&i| yes(i)));
        c.all_lang += usize::from(lang_yes);
        c.all_en += usize::from(idx.iter().any(|&i| is_en(i) && yes(i)) && !lang_yes);
    }
    out
}
